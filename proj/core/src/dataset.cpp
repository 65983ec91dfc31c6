#include "pianodiff/dataset.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pianodiff {

namespace {

constexpr char kMagic[8] = {'P', 'D', 'D', 'S', '0', '0', '0', '1'};

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
T get(std::istream& is) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("dataset: truncated");
  return v;
}

}  // namespace

void save_dataset(std::ostream& os, const Corpus& items) {
  os.write(kMagic, 8);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(items.size()));
  for (const auto& item : items) {
    put<std::uint32_t>(os, static_cast<std::uint32_t>(item.lead.roll.frames()));
    const auto& lead = item.lead.roll.raw();
    os.write(reinterpret_cast<const char*>(lead.data()),
             static_cast<std::streamsize>(lead.size()));
    const auto& acc = item.accompaniment.raw();
    os.write(reinterpret_cast<const char*>(acc.data()),
             static_cast<std::streamsize>(acc.size()));
    put<std::uint8_t>(os, static_cast<std::uint8_t>(item.lead.key.tonic));
    put<std::uint8_t>(os, static_cast<std::uint8_t>(item.lead.key.mode));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(item.lead.chords.size()));
    for (const auto& span : item.lead.chords) {
      put<double>(os, span.start_beat);
      put<double>(os, span.end_beat);
      put<std::uint8_t>(os, static_cast<std::uint8_t>(span.chord.root));
      put<std::uint8_t>(os, static_cast<std::uint8_t>(span.chord.quality));
    }
  }
  if (!os) throw std::runtime_error("dataset: write failed");
}

Corpus load_dataset(std::istream& is) {
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0)
    throw std::runtime_error("dataset: bad magic/version");
  auto count = get<std::uint32_t>(is);
  Corpus items;
  items.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    auto frames = get<std::uint32_t>(is);
    TrainItem item;
    item.lead.roll = PianoRoll(static_cast<int>(frames));
    is.read(reinterpret_cast<char*>(item.lead.roll.raw().data()),
            static_cast<std::streamsize>(item.lead.roll.raw().size()));
    item.accompaniment = PianoRoll(static_cast<int>(frames));
    is.read(reinterpret_cast<char*>(item.accompaniment.raw().data()),
            static_cast<std::streamsize>(item.accompaniment.raw().size()));
    item.lead.key.tonic = get<std::uint8_t>(is);
    item.lead.key.mode = static_cast<Mode>(get<std::uint8_t>(is));
    auto nspans = get<std::uint32_t>(is);
    for (std::uint32_t s = 0; s < nspans; ++s) {
      ChordSpan span;
      span.start_beat = get<double>(is);
      span.end_beat = get<double>(is);
      span.chord.root = get<std::uint8_t>(is);
      span.chord.quality = static_cast<ChordQuality>(get<std::uint8_t>(is));
      item.lead.chords.push_back(span);
    }
    if (!is) throw std::runtime_error("dataset: truncated");
    items.push_back(std::move(item));
  }
  return items;
}

void save_dataset_file(const std::string& path, const Corpus& items) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write dataset: " + path);
  save_dataset(f, items);
}

Corpus load_dataset_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open dataset: " + path);
  return load_dataset(f);
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(ch))) {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

Annotation parse_annotation(std::istream& is) {
  Annotation out;
  bool key_seen = false;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_csv(line);
    if (fields.empty() || fields[0].empty()) continue;
    if (fields[0] == "key") {
      if (fields.size() != 3)
        throw std::runtime_error("annotation line " + std::to_string(lineno) +
                                 ": key needs `key,<tonic>,<mode>`");
      auto pc = parse_pitch_class(fields[1]);
      if (!pc) throw std::runtime_error("annotation: bad key tonic " + fields[1]);
      out.key.tonic = *pc;
      if (fields[2] == "major") out.key.mode = Mode::Major;
      else if (fields[2] == "minor") out.key.mode = Mode::Minor;
      else throw std::runtime_error("annotation: bad mode " + fields[2]);
      key_seen = true;
      continue;
    }
    if (fields.size() != 4)
      throw std::runtime_error("annotation line " + std::to_string(lineno) +
                               ": expected start_beat,end_beat,root,quality");
    ChordSpan span;
    span.start_beat = std::stod(fields[0]);
    span.end_beat = std::stod(fields[1]);
    auto pc = parse_pitch_class(fields[2]);
    if (!pc) throw std::runtime_error("annotation: bad chord root " + fields[2]);
    span.chord.root = *pc;
    auto q = parse_quality(fields[3]);
    if (!q) throw std::runtime_error("annotation: bad chord quality " + fields[3]);
    span.chord.quality = *q;
    out.chords.push_back(span);
  }
  if (!key_seen) throw std::runtime_error("annotation: missing key line");
  return out;
}

Annotation parse_annotation_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open annotation: " + path);
  return parse_annotation(f);
}

}  // namespace pianodiff
