#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "pianodiff/dataset.hpp"
#include "pianodiff/denoiser.hpp"
#include "pianodiff/diffusion.hpp"
#include "pianodiff/metrics.hpp"
#include "pianodiff/midi.hpp"
#include "pianodiff/pgm.hpp"
#include "pianodiff/rng.hpp"
#include "pianodiff/run_config.hpp"
#include "pianodiff/trainer.hpp"

namespace fs = std::filesystem;
using namespace pianodiff;

namespace {

constexpr std::uint64_t kGenerateTag = 0x67656e21ULL;

// chord spans intersected with [start_beat, end_beat), rebased to 0
std::vector<ChordSpan> crop_spans(const std::vector<ChordSpan>& spans,
                                  double start_beat, double end_beat) {
  std::vector<ChordSpan> out;
  for (const auto& s : spans) {
    double a = std::max(s.start_beat, start_beat);
    double b = std::min(s.end_beat, end_beat);
    if (b <= a) continue;
    out.push_back({a - start_beat, b - start_beat, s.chord});
  }
  return out;
}

struct IngestOpts {
  std::string midi_dir;
  int melody_track = 0;
  std::vector<int> acc_tracks;
  std::string chords_file;  // single-song override; sidecar <stem>.csv otherwise
  std::string out;
};

int run_ingest(const IngestOpts& opt) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(opt.midi_dir)) {
    auto ext = e.path().extension().string();
    if (ext == ".mid" || ext == ".midi") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw std::runtime_error("no MIDI files in " + opt.midi_dir);
  if (!opt.chords_file.empty() && files.size() != 1)
    throw std::runtime_error("--chords-file needs a single-song directory");

  Corpus corpus;
  int skipped_time_sig = 0;
  for (const auto& f : files) {
    MidiFile midi;
    try {
      midi = parse_midi(read_file_bytes(f.string()));
    } catch (const std::exception& e) {
      std::string what = e.what();
      if (what.find("time signature") != std::string::npos) {
        ++skipped_time_sig;
        std::printf("%s: skipped (%s)\n", f.filename().c_str(), what.c_str());
        continue;
      }
      throw;
    }
    fs::path ann_path = opt.chords_file.empty()
                            ? fs::path(f).replace_extension(".csv")
                            : fs::path(opt.chords_file);
    if (!fs::exists(ann_path))
      throw std::runtime_error("missing annotation: " + ann_path.string());
    Annotation ann = parse_annotation_file(ann_path.string());

    if (opt.melody_track < 0 ||
        opt.melody_track >= static_cast<int>(midi.tracks.size()))
      throw std::runtime_error(f.filename().string() + ": no track " +
                               std::to_string(opt.melody_track));
    std::vector<MidiNote> acc_notes;
    for (int t : opt.acc_tracks) {
      if (t < 0 || t >= static_cast<int>(midi.tracks.size()))
        throw std::runtime_error(f.filename().string() + ": no track " +
                                 std::to_string(t));
      acc_notes.insert(acc_notes.end(), midi.tracks[t].begin(), midi.tracks[t].end());
    }
    auto mel = notes_to_roll(midi.tracks[opt.melody_track], midi.division);
    auto acc = notes_to_roll(acc_notes, midi.division);
    int frames = std::max(mel.roll.frames(), acc.roll.frames());
    if (mel.roll.frames() < frames)
      mel = notes_to_roll(midi.tracks[opt.melody_track], midi.division, frames);
    if (acc.roll.frames() < frames)
      acc = notes_to_roll(acc_notes, midi.division, frames);

    int bars = frames / kFramesPerBar;
    int n_segments = bars / 8;
    for (int s = 0; s < n_segments; ++s) {
      PianoRoll mel_seg = crop_bars(mel.roll, s * 8);
      PianoRoll acc_seg = crop_bars(acc.roll, s * 8);
      double beat0 = s * 8 * 4.0;
      auto spans = crop_spans(ann.chords, beat0, beat0 + 32.0);
      auto built = build_lead_sheet(mel_seg, spans, ann.key);
      corpus.push_back({built.sheet, acc_seg});
    }
    std::printf("%s: frames=%d segments=%d dropped_notes=%d\n",
                f.filename().c_str(), frames, n_segments,
                mel.dropped_notes + acc.dropped_notes);
  }
  if (skipped_time_sig) std::printf("skipped non-4/4 songs: %d\n", skipped_time_sig);
  if (corpus.empty()) throw std::runtime_error("no usable songs");
  save_dataset_file(opt.out, corpus);
  std::printf("wrote %zu segments to %s\n", corpus.size(), opt.out.c_str());
  return 0;
}

struct TrainOpts {
  std::string config;
  std::string data;
  std::string out_dir;
};

int run_train(const TrainOpts& opt) {
  if (!fs::exists(opt.data)) {
    std::fprintf(stderr, "error: data file not found: %s\n", opt.data.c_str());
    return 2;
  }
  RunConfig cfg =
      opt.config.empty() ? RunConfig{} : RunConfig::parse_file(opt.config);
  Corpus corpus = load_dataset_file(opt.data);
  fs::create_directories(opt.out_dir);

  std::ofstream log(fs::path(opt.out_dir) / "train.log");
  if (!log) throw std::runtime_error("cannot write log in " + opt.out_dir);
  // resolved config echoed verbatim, one commented line each
  std::istringstream cfg_lines(cfg.resolved());
  std::string line;
  while (std::getline(cfg_lines, line)) log << "# " << line << "\n";

  NoiseSchedule schedule = NoiseSchedule::linear(
      cfg.diffusion.steps, cfg.diffusion.terminal_keep, cfg.diffusion.terminal_mask);
  Denoiser model(cfg.denoiser);
  model.init_params(cfg.train.seed);
  Trainer trainer(model, schedule, cfg.train);

  double best_val = std::numeric_limits<double>::infinity();
  double last_f1 = 0.0;
  for (int step = 0; step < cfg.train.max_steps; ++step) {
    StepLosses losses = trainer.train_step(corpus);
    std::optional<Trainer::Validation> val;
    if (cfg.train.val_every > 0 && (step + 1) % cfg.train.val_every == 0) {
      auto v = trainer.validate(corpus, cfg.train.val_f1,
                                mix_seed(cfg.train.seed, 0x76616c00ULL, step + 1));
      trainer.observe_validation(v.mean_loss, cfg.train.val_every);
      best_val = std::min(best_val, v.mean_loss);
      if (cfg.train.val_f1) last_f1 = v.onset_f1;
      val = v;
    }
    log << Trainer::log_line(step + 1, losses, trainer.state().lr, val) << "\n";
    if (cfg.train.checkpoint_every > 0 && (step + 1) % cfg.train.checkpoint_every == 0) {
      char name[64];
      std::snprintf(name, sizeof(name), "checkpoint-%06d.bin", step + 1);
      trainer.save_checkpoint((fs::path(opt.out_dir) / name).string());
    }
  }
  trainer.save_checkpoint((fs::path(opt.out_dir) / "checkpoint-final.bin").string());
  {
    std::ostringstream os;
    os.precision(12);
    os << "# done best_val_loss=";
    if (std::isfinite(best_val)) os << best_val; else os << "nan";
    os << " val_f1=" << last_f1;
    log << os.str() << "\n";
    std::printf("%s\n", os.str().c_str());
  }
  return 0;
}

struct GenerateOpts {
  std::string checkpoint;
  std::string lead_sheet_midi;
  std::string chords_file;
  std::string out_midi;
  std::uint64_t seed = 0;
  bool as_sampling = false;
  int steps = 100;
};

int run_generate(const GenerateOpts& opt) {
  auto model = Denoiser::load_file(opt.checkpoint);
  Annotation ann = parse_annotation_file(opt.chords_file);
  auto mel = midi_to_roll(read_file_bytes(opt.lead_sheet_midi));
  int bars = mel.roll.frames() / kFramesPerBar;
  int n_windows = bars / 8;
  if (n_windows < 1) throw std::runtime_error("lead sheet shorter than 8 bars");

  NoiseSchedule schedule = NoiseSchedule::linear(opt.steps);
  auto t0 = std::chrono::steady_clock::now();
  PianoRoll out(n_windows * 8 * kFramesPerBar);
  for (int w = 0; w < n_windows; ++w) {
    PianoRoll mel_seg = crop_bars(mel.roll, w * 8);
    double beat0 = w * 8 * 4.0;
    auto spans = crop_spans(ann.chords, beat0, beat0 + 32.0);
    auto built = build_lead_sheet(mel_seg, spans, ann.key);
    auto predict = model->predictor(built.sheet.roll);
    PianoRoll seg = generate(mel_seg.frames(), predict, schedule, opt.as_sampling,
                             mix_seed(opt.seed, kGenerateTag, w));
    for (int t = 0; t < seg.frames(); ++t)
      for (int p = 0; p < kNumPitches; ++p)
        out.set(w * 8 * kFramesPerBar + t, p, seg.at(t, p));
  }
  auto t1 = std::chrono::steady_clock::now();
  out = sustain_repair(out);
  write_file_bytes(opt.out_midi, roll_to_midi(out, mel.tempo_bpm));
  double secs = std::chrono::duration<double>(t1 - t0).count();
  std::printf("generated %d bars in %.2f s (%.2f s per 8-bar window)\n",
              n_windows * 8, secs, secs / n_windows);
  return 0;
}

struct EvalOpts {
  std::string generated_dir;
  std::string reference_container;
  std::string report;
};

int run_eval(const EvalOpts& opt) {
  Corpus refs = load_dataset_file(opt.reference_container);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(opt.generated_dir))
    if (e.path().extension() == ".mid") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw std::runtime_error("no .mid files in " + opt.generated_dir);

  MetricReport report;
  for (const auto& f : files) {
    int idx = -1;
    try {
      idx = std::stoi(f.stem().string());
    } catch (const std::exception&) {
      throw std::runtime_error("generated file name must be a segment index: " +
                               f.filename().string());
    }
    if (idx < 0 || idx >= static_cast<int>(refs.size()))
      throw std::runtime_error("no reference segment for " + f.filename().string());
    const TrainItem& ref = refs[idx];
    auto gen = midi_to_roll(read_file_bytes(f.string()), ref.lead.roll.frames());
    if (gen.roll.frames() != ref.lead.roll.frames())
      throw std::runtime_error(f.filename().string() + ": frame count mismatch");
    report.segments.push_back(evaluate_segment(f.stem().string(), gen.roll, ref.lead));
  }
  {
    std::ofstream csv(opt.report + ".csv");
    if (!csv) throw std::runtime_error("cannot write " + opt.report + ".csv");
    csv << report.to_csv();
  }
  {
    std::ofstream txt(opt.report + ".txt");
    if (!txt) throw std::runtime_error("cannot write " + opt.report + ".txt");
    txt << report.to_text();
  }
  std::printf("%s", report.to_text().c_str());
  return 0;
}

struct RenderOpts {
  std::string midi;
  std::string container_item;  // <container>:<index>[:lead]
  std::string out_pgm;
};

int run_render(const RenderOpts& opt) {
  PianoRoll roll;
  if (!opt.midi.empty()) {
    roll = midi_to_roll(read_file_bytes(opt.midi)).roll;
  } else {
    auto c1 = opt.container_item.find(':');
    if (c1 == std::string::npos)
      throw std::runtime_error("--container-item wants <container>:<index>[:lead]");
    std::string path = opt.container_item.substr(0, c1);
    std::string rest = opt.container_item.substr(c1 + 1);
    bool lead = false;
    auto c2 = rest.find(':');
    if (c2 != std::string::npos) {
      lead = rest.substr(c2 + 1) == "lead";
      rest = rest.substr(0, c2);
    }
    int idx = std::stoi(rest);
    Corpus items = load_dataset_file(path);
    if (idx < 0 || idx >= static_cast<int>(items.size()))
      throw std::runtime_error("container has no item " + std::to_string(idx));
    roll = lead ? items[idx].lead.roll : items[idx].accompaniment;
  }
  write_pgm_file(opt.out_pgm, roll);
  return 0;
}

struct ScheduleOpts {
  int steps = 100;
  double terminal_keep = 0.009;
  double terminal_mask = 0.99;
  bool as_sampling = false;
  std::string out;
};

int run_schedule(const ScheduleOpts& opt) {
  NoiseSchedule s =
      NoiseSchedule::linear(opt.steps, opt.terminal_keep, opt.terminal_mask);
  if (opt.as_sampling) s = s.absorbing_only();
  if (opt.out.empty()) {
    s.dump(std::cout);
  } else {
    std::ofstream f(opt.out);
    if (!f) throw std::runtime_error("cannot write " + opt.out);
    s.dump(f);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lead-sheet conditioned piano accompaniment generator"};
  app.require_subcommand(1);

  IngestOpts ingest;
  auto* c_ingest = app.add_subcommand("ingest", "build a dataset container from MIDI");
  c_ingest->add_option("--midi-dir", ingest.midi_dir)->required();
  c_ingest->add_option("--melody-track", ingest.melody_track)->required();
  c_ingest->add_option("--acc-tracks", ingest.acc_tracks)->required()->delimiter(',');
  c_ingest->add_option("--chords-file", ingest.chords_file,
                       "annotation CSV (single song; default sidecar <stem>.csv)");
  c_ingest->add_option("--out", ingest.out)->required();

  TrainOpts train;
  auto* c_train = app.add_subcommand("train", "train a model on a container");
  c_train->add_option("--config", train.config, "flat key = value config");
  c_train->add_option("--data", train.data)->required();
  c_train->add_option("--out-dir", train.out_dir)->required();

  GenerateOpts gen;
  auto* c_gen = app.add_subcommand("generate", "generate an accompaniment MIDI");
  c_gen->add_option("--checkpoint", gen.checkpoint)->required();
  c_gen->add_option("--lead-sheet-midi", gen.lead_sheet_midi)->required();
  c_gen->add_option("--chords-file", gen.chords_file)->required();
  c_gen->add_option("--out-midi", gen.out_midi)->required();
  c_gen->add_option("--seed", gen.seed);
  c_gen->add_option("--steps", gen.steps);
  c_gen->add_flag("--as-sampling", gen.as_sampling);

  EvalOpts eval;
  auto* c_eval = app.add_subcommand("eval", "score generated segments");
  c_eval->add_option("--generated-dir", eval.generated_dir)->required();
  c_eval->add_option("--reference-container", eval.reference_container)->required();
  c_eval->add_option("--report", eval.report)->required();

  RenderOpts render;
  auto* c_render = app.add_subcommand("render", "render a roll to a PGM image");
  auto* o_midi = c_render->add_option("--midi", render.midi);
  auto* o_item = c_render->add_option("--container-item", render.container_item);
  o_midi->excludes(o_item);
  c_render->add_option("--out-pgm", render.out_pgm)->required();

  ScheduleOpts sched;
  auto* c_sched = app.add_subcommand("schedule", "dump the noise schedule table");
  c_sched->add_option("--steps", sched.steps);
  c_sched->add_option("--terminal-keep", sched.terminal_keep);
  c_sched->add_option("--terminal-mask", sched.terminal_mask);
  c_sched->add_flag("--as-sampling", sched.as_sampling);
  c_sched->add_option("--out", sched.out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*c_ingest) return run_ingest(ingest);
    if (*c_train) return run_train(train);
    if (*c_gen) return run_generate(gen);
    if (*c_eval) return run_eval(eval);
    if (*c_render) {
      if (render.midi.empty() && render.container_item.empty())
        throw std::runtime_error("render needs --midi or --container-item");
      return run_render(render);
    }
    if (*c_sched) return run_schedule(sched);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
