#include "pianodiff/pgm.hpp"

#include <fstream>
#include <stdexcept>

namespace pianodiff {

void write_pgm(std::ostream& os, const PianoRoll& roll) {
  os << "P5\n" << roll.frames() << " " << kNumPitches << "\n255\n";
  for (int row = 0; row < kNumPitches; ++row) {
    int p = kNumPitches - 1 - row;  // row 0 is the highest pitch
    for (int t = 0; t < roll.frames(); ++t) {
      unsigned char v;
      switch (roll.at(t, p)) {
        case NoteState::Onset: v = 0; break;
        case NoteState::Sustain: v = 128; break;
        case NoteState::Off: v = 255; break;
        default: throw std::invalid_argument("write_pgm: MASK in roll");
      }
      os.put(static_cast<char>(v));
    }
  }
  if (!os) throw std::runtime_error("write_pgm: write failed");
}

void write_pgm_file(const std::string& path, const PianoRoll& roll) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write pgm: " + path);
  write_pgm(f, roll);
}

}  // namespace pianodiff
