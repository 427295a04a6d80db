#include "modcodec/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace modcodec {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  size_t b = s.find_last_not_of(" \t\r");
  return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

uint32_t parse_u32(const std::string& key, const std::string& v) {
  try {
    const long long x = std::stoll(v);
    if (x < 0 || x > 0xFFFFFFFFLL) throw std::out_of_range("u32");
    return static_cast<uint32_t>(x);
  } catch (const std::exception&) {
    throw ConfigError("config: " + key + " expects an unsigned integer, got \"" +
                      v + "\"");
  }
}

uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    throw ConfigError("config: " + key + " expects an unsigned integer, got \"" +
                      v + "\"");
  }
}

double parse_real(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing");
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: " + key + " expects a real number, got \"" + v +
                      "\"");
  }
}

}  // namespace

KeyValueConfig KeyValueConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  KeyValueConfig cfg;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": expected key=value");
    }
    cfg.values_[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }
  return cfg;
}

void KeyValueConfig::set(const std::string& key, const std::string& value) {
  values_[key] = value;
}

bool KeyValueConfig::has(const std::string& key) const {
  return values_.count(key) > 0;
}

void KeyValueConfig::apply(NetworkConfig& net, TrainConfig& train,
                           RdLossConfig& rd) const {
  std::set<std::string> known;
  auto take = [&](const std::string& key) -> const std::string* {
    known.insert(key);
    auto it = values_.find(key);
    return it == values_.end() ? nullptr : &it->second;
  };

  if (const auto* v = take("nonlinearity")) {
    net.nonlinearity = transform_kind_from_string(*v);
  }
  if (const auto* v = take("stages")) net.stages = parse_u32("stages", *v);
  if (const auto* v = take("hidden_channels")) {
    net.hidden_channels = parse_u32("hidden_channels", *v);
  }
  if (const auto* v = take("latent_channels")) {
    net.latent_channels = parse_u32("latent_channels", *v);
  }
  if (const auto* v = take("kernel")) net.kernel = parse_u32("kernel", *v);
  if (const auto* v = take("stride")) net.stride = parse_u32("stride", *v);
  if (const auto* v = take("restsm_depth")) {
    net.restsm_depth = parse_u32("restsm_depth", *v);
  }
  if (const auto* v = take("input_channels")) {
    net.input_channels = parse_u32("input_channels", *v);
  }

  if (const auto* v = take("lambda")) rd.lambda = parse_real("lambda", *v);
  if (const auto* v = take("metric")) {
    if (*v == "mse") {
      rd.metric = RdLossConfig::Metric::mse;
    } else if (*v == "msssim") {
      rd.metric = RdLossConfig::Metric::msssim;
    } else {
      throw ConfigError("config: metric must be mse or msssim, got \"" + *v +
                        "\"");
    }
  }
  if (const auto* v = take("pixel_scale")) {
    rd.pixel_scale = parse_real("pixel_scale", *v);
  }

  if (const auto* v = take("batch_size")) {
    train.batch_size = parse_u32("batch_size", *v);
  }
  if (const auto* v = take("epochs")) train.epochs = parse_u32("epochs", *v);
  if (const auto* v = take("lr")) train.lr = parse_real("lr", *v);
  if (const auto* v = take("lr_drop_epoch")) {
    train.lr_drop_epoch = parse_u32("lr_drop_epoch", *v);
  }
  if (const auto* v = take("lr_drop_factor")) {
    train.lr_drop_factor = parse_real("lr_drop_factor", *v);
  }
  if (const auto* v = take("clip_threshold")) {
    train.clip_threshold = parse_real("clip_threshold", *v);
  }
  if (const auto* v = take("crop")) train.crop = parse_u32("crop", *v);
  if (const auto* v = take("seed")) train.seed = parse_u64("seed", *v);
  if (const auto* v = take("checkpoint_interval")) {
    train.checkpoint_interval = parse_u32("checkpoint_interval", *v);
  }
  if (const auto* v = take("max_steps")) {
    train.max_steps = parse_u64("max_steps", *v);
  }
  if (const auto* v = take("resume_from")) train.resume_from = *v;

  for (const auto& [key, value] : values_) {
    if (!known.count(key)) {
      throw ConfigError("config: unknown key \"" + key + "\"");
    }
  }
}

std::string KeyValueConfig::resolved_dump(const NetworkConfig& net,
                                          const TrainConfig& train,
                                          const RdLossConfig& rd) {
  std::ostringstream os;
  char buf[64];
  auto real = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return std::string(buf);
  };
  os << "batch_size=" << train.batch_size << "\n";
  os << "checkpoint_interval=" << train.checkpoint_interval << "\n";
  os << "clip_threshold=" << real(train.clip_threshold) << "\n";
  os << "crop=" << train.crop << "\n";
  os << "epochs=" << train.epochs << "\n";
  os << "hidden_channels=" << net.hidden_channels << "\n";
  os << "input_channels=" << net.input_channels << "\n";
  os << "kernel=" << net.kernel << "\n";
  os << "lambda=" << real(rd.lambda) << "\n";
  os << "latent_channels=" << net.latent_channels << "\n";
  os << "lr=" << real(train.lr) << "\n";
  os << "lr_drop_epoch=" << train.lr_drop_epoch << "\n";
  os << "lr_drop_factor=" << real(train.lr_drop_factor) << "\n";
  os << "max_steps=" << train.max_steps << "\n";
  os << "metric="
     << (rd.metric == RdLossConfig::Metric::mse ? "mse" : "msssim") << "\n";
  os << "nonlinearity=" << to_string(net.nonlinearity) << "\n";
  os << "pixel_scale=" << real(rd.pixel_scale) << "\n";
  os << "restsm_depth=" << net.restsm_depth << "\n";
  os << "resume_from=" << train.resume_from << "\n";
  os << "seed=" << train.seed << "\n";
  os << "stages=" << net.stages << "\n";
  os << "stride=" << net.stride << "\n";
  return os.str();
}

}  // namespace modcodec
