#include "pianodiff/run_config.hpp"

#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace pianodiff {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

int to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    int r = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw std::runtime_error("config: bad integer for " + key + ": " + v);
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    double r = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw std::runtime_error("config: bad number for " + key + ": " + v);
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::runtime_error("config: bad boolean for " + key + ": " + v);
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    std::uint64_t r = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw std::runtime_error("config: bad integer for " + key + ": " + v);
  }
}

std::vector<int> to_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string part;
  while (std::getline(ss, part, ',')) out.push_back(to_int(key, trim(part)));
  if (out.empty()) throw std::runtime_error("config: empty list for " + key);
  return out;
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string fmt_list(const std::vector<int>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) os << ',';
    os << v[i];
  }
  return os.str();
}

}  // namespace

RunConfig RunConfig::parse(std::istream& is) {
  RunConfig cfg;
  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"steps", [&](const std::string& k, const std::string& v) { cfg.diffusion.steps = to_int(k, v); }},
      {"terminal_keep", [&](const std::string& k, const std::string& v) { cfg.diffusion.terminal_keep = to_double(k, v); }},
      {"terminal_mask", [&](const std::string& k, const std::string& v) { cfg.diffusion.terminal_mask = to_double(k, v); }},
      {"n_layers", [&](const std::string& k, const std::string& v) { cfg.denoiser.n_layers = to_int(k, v); }},
      {"window", [&](const std::string& k, const std::string& v) { cfg.denoiser.window = to_int(k, v); }},
      {"dilations", [&](const std::string& k, const std::string& v) { cfg.denoiser.dilations = to_int_list(k, v); }},
      {"state_embed_dim", [&](const std::string& k, const std::string& v) { cfg.denoiser.state_embed_dim = to_int(k, v); }},
      {"hidden_dim", [&](const std::string& k, const std::string& v) { cfg.denoiser.hidden_dim = to_int(k, v); }},
      {"time_embed_dim", [&](const std::string& k, const std::string& v) { cfg.denoiser.time_embed_dim = to_int(k, v); }},
      {"batch_size", [&](const std::string& k, const std::string& v) { cfg.train.batch_size = to_int(k, v); }},
      {"max_steps", [&](const std::string& k, const std::string& v) { cfg.train.max_steps = to_int(k, v); }},
      {"beta1", [&](const std::string& k, const std::string& v) { cfg.train.beta1 = to_double(k, v); }},
      {"beta2", [&](const std::string& k, const std::string& v) { cfg.train.beta2 = to_double(k, v); }},
      {"weight_decay", [&](const std::string& k, const std::string& v) { cfg.train.weight_decay = to_double(k, v); }},
      {"adam_eps", [&](const std::string& k, const std::string& v) { cfg.train.adam_eps = to_double(k, v); }},
      {"initial_lr", [&](const std::string& k, const std::string& v) { cfg.train.initial_lr = to_double(k, v); }},
      {"lr_decay_factor", [&](const std::string& k, const std::string& v) { cfg.train.lr_decay_factor = to_double(k, v); }},
      {"plateau_patience_steps", [&](const std::string& k, const std::string& v) { cfg.train.plateau_patience_steps = to_int(k, v); }},
      {"aux_weight",
       [&](const std::string& k, const std::string& v) {
         cfg.train.aux_weight = to_double(k, v);
         cfg.diffusion.aux_weight = cfg.train.aux_weight;
       }},
      {"seed", [&](const std::string& k, const std::string& v) { cfg.train.seed = to_u64(k, v); }},
      {"augment", [&](const std::string& k, const std::string& v) { cfg.train.augment = to_bool(k, v); }},
      {"transpose_min", [&](const std::string& k, const std::string& v) { cfg.train.transpose_min = to_int(k, v); }},
      {"transpose_max", [&](const std::string& k, const std::string& v) { cfg.train.transpose_max = to_int(k, v); }},
      {"val_every", [&](const std::string& k, const std::string& v) { cfg.train.val_every = to_int(k, v); }},
      {"val_f1", [&](const std::string& k, const std::string& v) { cfg.train.val_f1 = to_bool(k, v); }},
      {"checkpoint_every", [&](const std::string& k, const std::string& v) { cfg.train.checkpoint_every = to_int(k, v); }},
  };

  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(lineno) +
                               ": expected `key = value`");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    auto it = setters.find(key);
    if (it == setters.end())
      throw std::runtime_error("config line " + std::to_string(lineno) +
                               ": unknown key `" + key + "`");
    it->second(key, value);
  }
  cfg.denoiser.validate();
  cfg.train.validate();
  if (cfg.diffusion.steps < 1) throw std::runtime_error("config: steps must be >= 1");
  return cfg;
}

RunConfig RunConfig::parse_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config: " + path);
  return parse(f);
}

std::string RunConfig::resolved() const {
  std::ostringstream os;
  os << "steps = " << diffusion.steps << "\n";
  os << "terminal_keep = " << fmt_double(diffusion.terminal_keep) << "\n";
  os << "terminal_mask = " << fmt_double(diffusion.terminal_mask) << "\n";
  os << "n_layers = " << denoiser.n_layers << "\n";
  os << "window = " << denoiser.window << "\n";
  os << "dilations = " << fmt_list(denoiser.dilations) << "\n";
  os << "state_embed_dim = " << denoiser.state_embed_dim << "\n";
  os << "hidden_dim = " << denoiser.hidden_dim << "\n";
  os << "time_embed_dim = " << denoiser.time_embed_dim << "\n";
  os << "batch_size = " << train.batch_size << "\n";
  os << "max_steps = " << train.max_steps << "\n";
  os << "beta1 = " << fmt_double(train.beta1) << "\n";
  os << "beta2 = " << fmt_double(train.beta2) << "\n";
  os << "weight_decay = " << fmt_double(train.weight_decay) << "\n";
  os << "adam_eps = " << fmt_double(train.adam_eps) << "\n";
  os << "initial_lr = " << fmt_double(train.initial_lr) << "\n";
  os << "lr_decay_factor = " << fmt_double(train.lr_decay_factor) << "\n";
  os << "plateau_patience_steps = " << train.plateau_patience_steps << "\n";
  os << "aux_weight = " << fmt_double(train.aux_weight) << "\n";
  os << "seed = " << train.seed << "\n";
  os << "augment = " << (train.augment ? "true" : "false") << "\n";
  os << "transpose_min = " << train.transpose_min << "\n";
  os << "transpose_max = " << train.transpose_max << "\n";
  os << "val_every = " << train.val_every << "\n";
  os << "val_f1 = " << (train.val_f1 ? "true" : "false") << "\n";
  os << "checkpoint_every = " << train.checkpoint_every << "\n";
  return os.str();
}

}  // namespace pianodiff
