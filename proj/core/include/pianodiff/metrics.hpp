#pragma once

#include <array>
#include <optional>

#include "pianodiff/lead_sheet.hpp"
#include "pianodiff/roll.hpp"

namespace pianodiff {

// Fraction of ONSET cells whose pitch class falls outside the key's scale;
// 0 when the roll has no onsets.
double ook(const PianoRoll& roll, const KeySignature& key);

using Chroma = std::array<double, 12>;

// Duration-weighted pitch-class histogram over [start_frame, end_frame):
// every sounding frame (ONSET or SUSTAIN) contributes weight 1.
Chroma chroma_histogram(const PianoRoll& roll, int start_frame, int end_frame);

// Rule-based per-beat chord extraction: template scoring of the beat's
// chroma with a 0.5 penalty on non-chord-tone mass. Ties prefer triads over
// sevenths, then a root matching the lowest sounding pitch, then the lowest
// root pitch class. Empty beats carry the previous label (nullopt at the
// start).
std::vector<std::optional<ChordLabel>> extract_chords(const PianoRoll& roll);

// Fraction of beats where root and quality both match; a missing label on
// either side matches nothing.
double chord_accuracy(const std::vector<std::optional<ChordLabel>>& extracted,
                      const std::vector<std::optional<ChordLabel>>& reference);

// Mean cosine between L2-normalized duration-weighted chroma of the roll and
// the normalized chord-tone indicator of the reference, over non-overlapping
// 2-bar windows. A window with zero mass on either side scores 0.
double chord_similarity(const PianoRoll& roll,
                        const std::vector<ChordSpan>& reference_chords);

// Mean pairwise similarity (1 - hamming/16) of per-bar binary onset vectors.
double grooving_similarity(const PianoRoll& roll);

struct SegmentMetrics {
  std::string id;
  double ook = 0.0;
  double ca = 0.0;
  double cs = 0.0;
  double gs = 0.0;
};

struct MetricReport {
  std::vector<SegmentMetrics> segments;
  // unweighted means
  double mean_ook() const;
  double mean_ca() const;
  double mean_cs() const;
  double mean_gs() const;

  std::string to_text() const;
  std::string to_csv() const;
};

SegmentMetrics evaluate_segment(const std::string& id, const PianoRoll& generated,
                                const LeadSheet& reference);

}  // namespace pianodiff
