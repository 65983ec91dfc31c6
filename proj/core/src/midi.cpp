#include "pianodiff/midi.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <stdexcept>

namespace pianodiff {

namespace {

class ByteReader {
 public:
  ByteReader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

  std::uint8_t u8() {
    if (pos_ >= size_) throw std::runtime_error("midi: unexpected end of data");
    return data_[pos_++];
  }
  std::uint32_t u16() { return (static_cast<std::uint32_t>(u8()) << 8) | u8(); }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | u8();
    return v;
  }
  std::uint32_t varint() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      std::uint8_t b = u8();
      v = (v << 7) | (b & 0x7f);
      if (!(b & 0x80)) return v;
    }
    throw std::runtime_error("midi: varint too long");
  }
  void skip(std::size_t n) {
    if (pos_ + n > size_) throw std::runtime_error("midi: unexpected end of data");
    pos_ += n;
  }
  std::size_t pos() const { return pos_; }
  bool at(std::size_t p) const { return pos_ == p; }

 private:
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

}  // namespace

MidiFile parse_midi(const std::vector<std::uint8_t>& bytes) {
  ByteReader r(bytes.data(), bytes.size());
  if (r.u32() != 0x4d546864u) throw std::runtime_error("midi: missing MThd");
  std::uint32_t hlen = r.u32();
  if (hlen < 6) throw std::runtime_error("midi: bad header length");
  std::uint32_t format = r.u16();
  std::uint32_t ntrks = r.u16();
  std::uint32_t division = r.u16();
  r.skip(hlen - 6);
  if (format > 1) throw std::runtime_error("midi: only format 0/1 supported");
  if (division & 0x8000) throw std::runtime_error("midi: SMPTE division unsupported");
  if (division == 0) throw std::runtime_error("midi: zero division");

  MidiFile out;
  out.division = static_cast<int>(division);
  bool tempo_seen = false;

  for (std::uint32_t trk = 0; trk < ntrks; ++trk) {
    if (r.u32() != 0x4d54726bu) throw std::runtime_error("midi: missing MTrk");
    std::uint32_t tlen = r.u32();
    std::size_t track_end = r.pos() + tlen;

    std::vector<MidiNote> notes;
    // pitch -> start tick of the currently sounding note, -1 if none
    std::array<std::int64_t, 128> active;
    active.fill(-1);

    std::int64_t tick = 0;
    std::uint8_t running = 0;
    while (!r.at(track_end)) {
      tick += r.varint();
      std::uint8_t b = r.u8();
      if (b == 0xff) {
        std::uint8_t meta = r.u8();
        std::uint32_t len = r.varint();
        if (meta == 0x51) {
          if (len != 3) throw std::runtime_error("midi: bad tempo length");
          std::uint32_t usec = (static_cast<std::uint32_t>(r.u8()) << 16) |
                               (static_cast<std::uint32_t>(r.u8()) << 8) | r.u8();
          if (!tempo_seen && usec > 0) {
            out.tempo_bpm = 60000000.0 / usec;
            tempo_seen = true;
          }
        } else if (meta == 0x58) {
          if (len < 2) throw std::runtime_error("midi: bad time-signature length");
          std::uint8_t nn = r.u8();
          std::uint8_t dd = r.u8();
          r.skip(len - 2);
          if (nn != 4 || dd != 2) throw std::runtime_error("midi: non-4/4 time signature");
        } else {
          r.skip(len);
        }
        running = 0;
        continue;
      }
      if (b == 0xf0 || b == 0xf7) {
        r.skip(r.varint());
        running = 0;
        continue;
      }
      std::uint8_t status, data1;
      if (b & 0x80) {
        status = b;
        running = status;
        std::uint8_t type0 = status & 0xf0;
        if (type0 == 0xc0 || type0 == 0xd0) {
          data1 = r.u8();
          // single-data-byte messages carry no pitch; nothing more to do
          continue;
        }
        data1 = r.u8();
      } else {
        if (running == 0) throw std::runtime_error("midi: data byte without status");
        status = running;
        std::uint8_t type0 = status & 0xf0;
        if (type0 == 0xc0 || type0 == 0xd0) continue;
        data1 = b;
      }
      std::uint8_t type = status & 0xf0;
      switch (type) {
        case 0x80:    // note off
        case 0x90: {  // note on
          std::uint8_t vel = r.u8();
          int pitch = data1 & 0x7f;
          bool on = type == 0x90 && vel > 0;
          if (on) {
            if (active[pitch] >= 0)
              notes.push_back({active[pitch], tick, pitch});
            active[pitch] = tick;
          } else if (active[pitch] >= 0) {
            notes.push_back({active[pitch], tick, pitch});
            active[pitch] = -1;
          }
          break;
        }
        case 0xa0:
        case 0xb0:
        case 0xe0:
          r.u8();
          break;
        default:
          throw std::runtime_error("midi: unknown status byte");
      }
    }
    // close any notes left hanging at end of track
    for (int p = 0; p < 128; ++p)
      if (active[p] >= 0) notes.push_back({active[p], tick, p});
    out.tracks.push_back(std::move(notes));
  }
  return out;
}

namespace {
// round-half-up quantization of ticks to 16th frames
int quantize_frame(std::int64_t tick, int division) {
  return static_cast<int>((8 * tick + division) / (2 * static_cast<std::int64_t>(division)));
}
}  // namespace

MidiToRollResult notes_to_roll(const std::vector<MidiNote>& notes, int division,
                               int min_frames) {
  struct QNote {
    int start, end, pitch;
  };
  std::vector<QNote> q;
  int dropped = 0;
  int max_end = 0;
  for (const auto& n : notes) {
    if (n.pitch < kLowestMidiPitch || n.pitch > kHighestMidiPitch) {
      ++dropped;
      continue;
    }
    int s = quantize_frame(n.start_tick, division);
    int e = quantize_frame(n.end_tick, division);
    if (e <= s) e = s + 1;  // zero length after quantization: one ONSET frame
    q.push_back({s, e, n.pitch});
    max_end = std::max(max_end, e);
  }
  int frames = ((max_end + kFramesPerBar - 1) / kFramesPerBar) * kFramesPerBar;
  frames = std::max({frames, min_frames, kFramesPerBar});

  std::sort(q.begin(), q.end(), [](const QNote& a, const QNote& b) {
    return a.start != b.start ? a.start < b.start : a.end < b.end;
  });
  MidiToRollResult out{PianoRoll(frames), dropped, 120.0};
  for (const auto& n : q) {
    int p = n.pitch - kLowestMidiPitch;
    out.roll.set(n.start, p, NoteState::Onset);
    for (int t = n.start + 1; t < std::min(n.end, frames); ++t)
      out.roll.set(t, p, NoteState::Sustain);
  }
  return out;
}

MidiToRollResult midi_to_roll(const std::vector<std::uint8_t>& bytes, int min_frames) {
  MidiFile file = parse_midi(bytes);
  std::vector<MidiNote> all;
  for (const auto& trk : file.tracks) all.insert(all.end(), trk.begin(), trk.end());
  MidiToRollResult out = notes_to_roll(all, file.division, min_frames);
  out.tempo_bpm = file.tempo_bpm;
  return out;
}

namespace {

void push_u16(std::vector<std::uint8_t>& v, std::uint32_t x) {
  v.push_back((x >> 8) & 0xff);
  v.push_back(x & 0xff);
}
void push_u32(std::vector<std::uint8_t>& v, std::uint32_t x) {
  for (int i = 3; i >= 0; --i) v.push_back((x >> (8 * i)) & 0xff);
}
void push_varint(std::vector<std::uint8_t>& v, std::uint32_t x) {
  std::uint8_t buf[4];
  int n = 0;
  buf[n++] = x & 0x7f;
  while (x >>= 7) buf[n++] = (x & 0x7f) | 0x80;
  while (n--) v.push_back(buf[n]);
}

}  // namespace

std::vector<std::uint8_t> roll_to_midi(const PianoRoll& roll, double tempo_bpm) {
  if (roll.contains_mask()) throw std::invalid_argument("roll_to_midi: MASK cell present");
  if (!roll.sustain_legal())
    throw std::invalid_argument("roll_to_midi: SUSTAIN without preceding onset");

  constexpr int kDivision = 480;
  constexpr int kTicksPer16th = kDivision / 4;
  constexpr std::uint8_t kVelocity = 80;

  struct Event {
    std::int64_t tick;
    bool on;
    int pitch;
  };
  std::vector<Event> events;
  for (int p = 0; p < kNumPitches; ++p) {
    int t = 0;
    while (t < roll.frames()) {
      if (roll.at(t, p) == NoteState::Onset) {
        int e = t + 1;
        while (e < roll.frames() && roll.at(e, p) == NoteState::Sustain) ++e;
        events.push_back({static_cast<std::int64_t>(t) * kTicksPer16th, true,
                          p + kLowestMidiPitch});
        events.push_back({static_cast<std::int64_t>(e) * kTicksPer16th, false,
                          p + kLowestMidiPitch});
        t = e;
      } else {
        ++t;
      }
    }
  }
  std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    if (a.tick != b.tick) return a.tick < b.tick;
    if (a.on != b.on) return !a.on;  // offs before ons at the same tick
    return a.pitch < b.pitch;
  });

  std::vector<std::uint8_t> track;
  // tempo
  push_varint(track, 0);
  track.push_back(0xff);
  track.push_back(0x51);
  track.push_back(0x03);
  std::uint32_t usec = static_cast<std::uint32_t>(60000000.0 / tempo_bpm + 0.5);
  track.push_back((usec >> 16) & 0xff);
  track.push_back((usec >> 8) & 0xff);
  track.push_back(usec & 0xff);
  // 4/4 time signature
  push_varint(track, 0);
  for (std::uint8_t b : {0xff, 0x58, 0x04, 0x04, 0x02, 0x18, 0x08}) track.push_back(b);

  std::int64_t last_tick = 0;
  for (const auto& ev : events) {
    push_varint(track, static_cast<std::uint32_t>(ev.tick - last_tick));
    last_tick = ev.tick;
    track.push_back(ev.on ? 0x90 : 0x80);
    track.push_back(static_cast<std::uint8_t>(ev.pitch));
    track.push_back(ev.on ? kVelocity : 0);
  }
  // end of track
  push_varint(track, 0);
  track.push_back(0xff);
  track.push_back(0x2f);
  track.push_back(0x00);

  std::vector<std::uint8_t> out;
  push_u32(out, 0x4d546864u);
  push_u32(out, 6);
  push_u16(out, 0);  // format 0
  push_u16(out, 1);
  push_u16(out, kDivision);
  push_u32(out, 0x4d54726bu);
  push_u32(out, static_cast<std::uint32_t>(track.size()));
  out.insert(out.end(), track.begin(), track.end());
  return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open file: " + path);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(f),
                                   std::istreambuf_iterator<char>());
}

void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write file: " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
}

}  // namespace pianodiff
