#pragma once

#include <iosfwd>

#include "pianodiff/trainer.hpp"

namespace pianodiff {

// Versioned binary container of (lead sheet, accompaniment) segments.
// load(save(items)) is bit-exact.
void save_dataset(std::ostream& os, const Corpus& items);
Corpus load_dataset(std::istream& is);
void save_dataset_file(const std::string& path, const Corpus& items);
Corpus load_dataset_file(const std::string& path);

// Sidecar annotation: one `key,<tonic>,<mode>` line plus
// `start_beat,end_beat,root,quality` chord lines. `#` starts a comment.
struct Annotation {
  KeySignature key;
  std::vector<ChordSpan> chords;
};
Annotation parse_annotation(std::istream& is);
Annotation parse_annotation_file(const std::string& path);

}  // namespace pianodiff
