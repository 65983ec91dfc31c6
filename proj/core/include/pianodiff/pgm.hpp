#pragma once

#include <iosfwd>
#include <string>

#include "pianodiff/roll.hpp"

namespace pianodiff {

// Binary PGM (P5, maxval 255) rendering of a roll. Rows are pitches with the
// highest pitch on top, columns are frames. ONSET is black, SUSTAIN mid grey,
// OFF white. A MASK cell is an error.
void write_pgm(std::ostream& os, const PianoRoll& roll);
void write_pgm_file(const std::string& path, const PianoRoll& roll);

}  // namespace pianodiff
