#include "pianodiff/metrics.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace pianodiff {

double ook(const PianoRoll& roll, const KeySignature& key) {
  auto scale = key.scale();
  int onsets = 0, out_of_key = 0;
  for (int t = 0; t < roll.frames(); ++t) {
    for (int p = 0; p < kNumPitches; ++p) {
      if (roll.at(t, p) != NoteState::Onset) continue;
      ++onsets;
      int pc = (p + kLowestMidiPitch) % 12;
      if (!scale.count(pc)) ++out_of_key;
    }
  }
  return onsets == 0 ? 0.0 : static_cast<double>(out_of_key) / onsets;
}

Chroma chroma_histogram(const PianoRoll& roll, int start_frame, int end_frame) {
  Chroma h{};
  for (int t = start_frame; t < end_frame && t < roll.frames(); ++t) {
    for (int p = 0; p < kNumPitches; ++p) {
      NoteState s = roll.at(t, p);
      if (s == NoteState::Onset || s == NoteState::Sustain)
        h[(p + kLowestMidiPitch) % 12] += 1.0;
    }
  }
  return h;
}

namespace {

// lowest pitch class sounding anywhere in the window, or -1
int bass_pitch_class(const PianoRoll& roll, int start_frame, int end_frame) {
  for (int p = 0; p < kNumPitches; ++p)
    for (int t = start_frame; t < end_frame && t < roll.frames(); ++t) {
      NoteState s = roll.at(t, p);
      if (s == NoteState::Onset || s == NoteState::Sustain)
        return (p + kLowestMidiPitch) % 12;
    }
  return -1;
}

struct Candidate {
  ChordLabel label;
  double score;
};

}  // namespace

std::vector<std::optional<ChordLabel>> extract_chords(const PianoRoll& roll) {
  if (roll.contains_mask()) throw std::invalid_argument("extract_chords: MASK in roll");
  const int n_beats = roll.frames() / kFramesPerBeat;
  std::vector<std::optional<ChordLabel>> out;
  out.reserve(n_beats);
  std::optional<ChordLabel> prev;
  for (int b = 0; b < n_beats; ++b) {
    int s = b * kFramesPerBeat, e = s + kFramesPerBeat;
    Chroma h = chroma_histogram(roll, s, e);
    double total = 0.0;
    for (double v : h) total += v;
    if (total <= 0.0) {
      out.push_back(prev);  // nullopt at start = N.C.
      continue;
    }
    int bass = bass_pitch_class(roll, s, e);

    Candidate best{ChordLabel{}, -1e300};
    bool have = false;
    for (int root = 0; root < 12; ++root) {
      for (int qi = 0; qi < kNumQualities; ++qi) {
        ChordLabel cand{root, static_cast<ChordQuality>(qi)};
        auto tones = cand.pitch_classes();
        double tone_mass = 0.0;
        for (int pc : tones) tone_mass += h[pc];
        double score = (tone_mass - 0.5 * (total - tone_mass)) / total;
        if (!have || score > best.score + 1e-12) {
          best = {cand, score};
          have = true;
        } else if (score > best.score - 1e-12) {
          // tie-break: triad before seventh, then the bass note's root,
          // then the lowest root pitch class
          bool cand_triad = is_triad(cand.quality);
          bool best_triad = is_triad(best.label.quality);
          bool replace = false;
          if (cand_triad != best_triad) {
            replace = cand_triad;
          } else if ((cand.root == bass) != (best.label.root == bass)) {
            replace = cand.root == bass;
          } else {
            replace = cand.root < best.label.root;
          }
          if (replace) best = {cand, std::max(score, best.score)};
        }
      }
    }
    out.push_back(best.label);
    prev = best.label;
  }
  return out;
}

double chord_accuracy(const std::vector<std::optional<ChordLabel>>& extracted,
                      const std::vector<std::optional<ChordLabel>>& reference) {
  if (extracted.size() != reference.size())
    throw std::invalid_argument("chord_accuracy: length mismatch");
  if (extracted.empty()) return 0.0;
  int match = 0;
  for (std::size_t i = 0; i < extracted.size(); ++i)
    if (extracted[i] && reference[i] && *extracted[i] == *reference[i]) ++match;
  return static_cast<double>(match) / extracted.size();
}

double chord_similarity(const PianoRoll& roll,
                        const std::vector<ChordSpan>& reference_chords) {
  const int window = 2 * kFramesPerBar;
  if (roll.frames() % window != 0)
    throw std::invalid_argument("chord_similarity: roll length must be a multiple of 2 bars");
  const int n_windows = roll.frames() / window;
  double total = 0.0;
  for (int w = 0; w < n_windows; ++w) {
    int ws = w * window, we = ws + window;
    Chroma a = chroma_histogram(roll, ws, we);
    // reference: frames each pitch class spends as an active chord tone
    Chroma b{};
    for (const auto& span : reference_chords) {
      int s = std::max(span.start_frame(), ws);
      int e = std::min(span.end_frame(), we);
      if (e <= s) continue;
      for (int pc : span.chord.pitch_classes()) b[pc] += e - s;
    }
    double na = 0.0, nb = 0.0, dot = 0.0;
    for (int i = 0; i < 12; ++i) {
      na += a[i] * a[i];
      nb += b[i] * b[i];
      dot += a[i] * b[i];
    }
    if (na > 0.0 && nb > 0.0) total += dot / (std::sqrt(na) * std::sqrt(nb));
    // zero-mass window on either side contributes 0
  }
  return n_windows == 0 ? 0.0 : total / n_windows;
}

double grooving_similarity(const PianoRoll& roll) {
  if (roll.frames() % kFramesPerBar != 0)
    throw std::invalid_argument("grooving_similarity: roll length must be whole bars");
  const int n_bars = roll.frames() / kFramesPerBar;
  if (n_bars < 2)
    throw std::invalid_argument("grooving_similarity: need at least 2 bars");
  std::vector<std::uint16_t> patterns(n_bars, 0);
  for (int bar = 0; bar < n_bars; ++bar) {
    for (int q = 0; q < kFramesPerBar; ++q) {
      int t = bar * kFramesPerBar + q;
      for (int p = 0; p < kNumPitches; ++p) {
        if (roll.at(t, p) == NoteState::Onset) {
          patterns[bar] |= static_cast<std::uint16_t>(1u << q);
          break;
        }
      }
    }
  }
  double total = 0.0;
  int pairs = 0;
  for (int i = 0; i < n_bars; ++i) {
    for (int j = i + 1; j < n_bars; ++j) {
      int hamming = __builtin_popcount(patterns[i] ^ patterns[j]);
      total += 1.0 - static_cast<double>(hamming) / kFramesPerBar;
      ++pairs;
    }
  }
  return total / pairs;
}

SegmentMetrics evaluate_segment(const std::string& id, const PianoRoll& generated,
                                const LeadSheet& reference) {
  SegmentMetrics m;
  m.id = id;
  m.ook = ook(generated, reference.key);
  auto extracted = extract_chords(generated);
  auto ref = chords_per_beat(reference.chords, generated.frames() / kFramesPerBeat);
  m.ca = chord_accuracy(extracted, ref);
  m.cs = chord_similarity(generated, reference.chords);
  m.gs = grooving_similarity(generated);
  return m;
}

namespace {
double mean_of(const std::vector<SegmentMetrics>& v, double SegmentMetrics::*f) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (const auto& m : v) s += m.*f;
  return s / v.size();
}
}  // namespace

double MetricReport::mean_ook() const { return mean_of(segments, &SegmentMetrics::ook); }
double MetricReport::mean_ca() const { return mean_of(segments, &SegmentMetrics::ca); }
double MetricReport::mean_cs() const { return mean_of(segments, &SegmentMetrics::cs); }
double MetricReport::mean_gs() const { return mean_of(segments, &SegmentMetrics::gs); }

std::string MetricReport::to_text() const {
  std::ostringstream os;
  os.precision(6);
  os << "segments = " << segments.size() << "\n";
  os << "ook = " << mean_ook() << "\n";
  os << "ca = " << mean_ca() << "\n";
  os << "cs = " << mean_cs() << "\n";
  os << "gs = " << mean_gs() << "\n";
  return os.str();
}

std::string MetricReport::to_csv() const {
  std::ostringstream os;
  os.precision(6);
  os << "segment_id,ook,ca,cs,gs\n";
  for (const auto& m : segments)
    os << m.id << ',' << m.ook << ',' << m.ca << ',' << m.cs << ',' << m.gs << "\n";
  return os.str();
}

}  // namespace pianodiff
