#include "dtp/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace dtp {

namespace pt = boost::property_tree;

void RunConfig::validate() const {
  task.validate();
  model.validate();
  if (model.grid_h != task.grid_h || model.grid_w != task.grid_w ||
      model.d_model != task.d_model)
    throw ConfigError("model and task disagree on grid or embedding size");
  for (int id : task.prompt_ids)
    if (id < 0 || id >= model.prompt_vocab)
      throw ConfigError("prompt id " + std::to_string(id) + " outside vocabulary");
  dtp.validate(model);
  if (episodes < 1)
    throw ConfigError("episodes must be >= 1");
  if (bins < 2)
    throw ConfigError("bins must be >= 2");
}

Model RunConfig::build_model() const {
  validate();
  return policy == PolicyKind::planted ? build_planted_policy(model, planted)
                                       : dtp::build_model(model);
}

DtpConfig dtp_preset(std::string_view name) {
  DtpConfig c;
  if (name == "spatialvla") {
    c.tolerance = 0.5;
    c.top_k = 109;
    c.gaussian_sigma = 0.65;
    c.selected_layers = {4, 6};
    c.reuse_first_mask = true;
  } else if (name == "nora") {
    c.tolerance = 1.22;
    c.top_k = 40;
    c.gaussian_sigma = 0.65;
    c.selected_layers = {12, 13, 21};
    c.max_prune = 2;
  } else if (name == "univla") {
    c.tolerance = 0.7;
    c.top_k = 512;
    c.gaussian_sigma = 0.9;
    c.selected_layers = {11, 12};
  } else {
    throw ConfigError("unknown preset '" + std::string(name) + "'");
  }
  return c;
}

std::string format_number(double x) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

namespace {

std::string where(std::string_view section, std::string_view key) {
  return std::string(section) + "." + std::string(key);
}

template <class T> T parse_scalar(const std::string &s, const std::string &key) {
  T v{};
  const char *end = s.data() + s.size();
  auto r = std::from_chars(s.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end)
    throw ConfigError("bad value '" + s + "' for " + key);
  return v;
}

bool parse_bool(const std::string &s, const std::string &key) {
  if (s == "true" || s == "1")
    return true;
  if (s == "false" || s == "0")
    return false;
  throw ConfigError("bad boolean '" + s + "' for " + key);
}

std::vector<int> parse_int_list(const std::string &s, const std::string &key) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    out.push_back(parse_scalar<int>(item, key));
  if (out.empty())
    throw ConfigError("empty list for " + key);
  return out;
}

std::string join(const std::vector<int> &v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i)
    s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

// Reads known keys from one section; unknown keys are an error so typos
// do not silently fall back to defaults.
class Section {
public:
  Section(const pt::ptree &root, std::string name) : name_(std::move(name)) {
    if (auto child = root.get_child_optional(name_))
      tree_ = *child;
  }

  std::optional<std::string> raw(const std::string &key) {
    seen_.push_back(key);
    auto v = tree_.get_optional<std::string>(key);
    if (!v)
      return std::nullopt;
    return *v;
  }

  template <class T> void get(const std::string &key, T &out) {
    auto v = raw(key);
    if (!v)
      return;
    const std::string k = where(name_, key);
    if constexpr (std::is_same_v<T, bool>)
      out = parse_bool(*v, k);
    else if constexpr (std::is_same_v<T, std::string>)
      out = *v;
    else
      out = parse_scalar<T>(*v, k);
  }

  void finish() const {
    for (const auto &kv : tree_)
      if (std::find(seen_.begin(), seen_.end(), kv.first) == seen_.end())
        throw ConfigError("unknown key " + where(name_, kv.first));
  }

private:
  std::string name_;
  pt::ptree tree_;
  std::vector<std::string> seen_;
};

const char *kSections[] = {"model", "planted", "dtp", "task", "suite", "output"};

} // namespace

RunConfig parse_config(std::string_view text) {
  pt::ptree root;
  std::istringstream in{std::string(text)};
  try {
    pt::read_ini(in, root);
  } catch (const pt::ini_parser_error &e) {
    throw ConfigError(std::string("config: ") + e.message() + " at line " +
                      std::to_string(e.line()));
  }
  for (const auto &kv : root)
    if (std::find(std::begin(kSections), std::end(kSections), kv.first) ==
        std::end(kSections))
      throw ConfigError("unknown section [" + kv.first + "]");

  RunConfig c;

  Section model(root, "model");
  if (auto v = model.raw("policy")) {
    if (*v == "planted")
      c.policy = PolicyKind::planted;
    else if (*v == "random")
      c.policy = PolicyKind::random;
    else
      throw ConfigError("model.policy must be planted or random");
  }
  model.get("n_layers", c.model.n_layers);
  model.get("n_heads", c.model.n_heads);
  model.get("d_model", c.model.d_model);
  model.get("action_vocab", c.model.action_vocab);
  model.get("prompt_vocab", c.model.prompt_vocab);
  if (auto v = model.raw("layout")) {
    if (*v == "image_before_prompt")
      c.model.layout = Layout::image_before_prompt;
    else if (*v == "prompt_before_image")
      c.model.layout = Layout::prompt_before_image;
    else
      throw ConfigError("model.layout must be image_before_prompt or prompt_before_image");
  }
  model.get("seed", c.model.seed);
  model.finish();

  Section planted(root, "planted");
  planted.get("gripper_gain", c.planted.gripper_gain);
  planted.get("task_gain", c.planted.task_gain);
  planted.get("distractor_pull", c.planted.distractor_pull);
  planted.get("salience_gain", c.planted.salience_gain);
  planted.get("overprune_penalty", c.planted.overprune_penalty);
  planted.get("scene_margin", c.planted.scene_margin);
  planted.get("reference_prompt_length", c.planted.reference_prompt_length);
  planted.get("readout_gain", c.planted.readout_gain);
  planted.finish();

  Section dtp(root, "dtp");
  if (auto v = dtp.raw("preset"))
    c.dtp = dtp_preset(*v);
  if (auto v = dtp.raw("layers"))
    c.dtp.selected_layers = parse_int_list(*v, "dtp.layers");
  dtp.get("top_k", c.dtp.top_k);
  dtp.get("sigma", c.dtp.gaussian_sigma);
  dtp.get("corner_window", c.dtp.corner_window);
  dtp.get("corner_factor", c.dtp.corner_factor);
  dtp.get("tolerance", c.dtp.tolerance);
  if (auto v = dtp.raw("max_prune"))
    c.dtp.max_prune = *v == "none" ? std::nullopt
                                   : std::optional<int>(parse_scalar<int>(*v, "dtp.max_prune"));
  dtp.get("reuse_first_mask", c.dtp.reuse_first_mask);
  dtp.finish();

  Section task(root, "task");
  task.get("grid_h", c.task.grid_h);
  task.get("grid_w", c.task.grid_w);
  if (auto v = task.raw("prompt"))
    c.task.prompt_ids = parse_int_list(*v, "task.prompt");
  task.get("distractors", c.task.distractor_count);
  task.get("salience_min", c.task.salience_min);
  task.get("salience_max", c.task.salience_max);
  task.get("step_slack", c.task.step_slack);
  task.get("max_steps", c.task.max_steps);
  task.finish();
  c.model.grid_h = c.task.grid_h;
  c.model.grid_w = c.task.grid_w;
  c.task.d_model = c.model.d_model;

  Section suite(root, "suite");
  suite.get("episodes", c.episodes);
  suite.get("seed", c.seed);
  suite.get("strategy", c.strategy);
  suite.get("bins", c.bins);
  suite.get("tau_grid", c.tau_grid);
  suite.finish();

  Section output(root, "output");
  std::string dir;
  output.get("dir", dir);
  if (!dir.empty())
    c.out_dir = dir;
  output.get("heatmaps", c.export_heatmaps);
  output.get("masks", c.export_masks);
  output.get("logs", c.export_logs);
  output.finish();

  return c;
}

RunConfig load_config(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const RunConfig &c) {
  std::ostringstream o;
  auto b = [](bool v) { return v ? "true" : "false"; };
  const auto n = format_number;

  o << "[model]\n"
    << "policy=" << (c.policy == PolicyKind::planted ? "planted" : "random") << '\n'
    << "n_layers=" << c.model.n_layers << '\n'
    << "n_heads=" << c.model.n_heads << '\n'
    << "d_model=" << c.model.d_model << '\n'
    << "action_vocab=" << c.model.action_vocab << '\n'
    << "prompt_vocab=" << c.model.prompt_vocab << '\n'
    << "layout="
    << (c.model.layout == Layout::image_before_prompt ? "image_before_prompt"
                                                      : "prompt_before_image")
    << '\n'
    << "seed=" << c.model.seed << "\n\n";

  o << "[planted]\n"
    << "gripper_gain=" << n(c.planted.gripper_gain) << '\n'
    << "task_gain=" << n(c.planted.task_gain) << '\n'
    << "distractor_pull=" << n(c.planted.distractor_pull) << '\n'
    << "salience_gain=" << n(c.planted.salience_gain) << '\n'
    << "overprune_penalty=" << n(c.planted.overprune_penalty) << '\n'
    << "scene_margin=" << n(c.planted.scene_margin) << '\n'
    << "reference_prompt_length=" << c.planted.reference_prompt_length << '\n'
    << "readout_gain=" << n(c.planted.readout_gain) << "\n\n";

  o << "[dtp]\n"
    << "layers=" << join(c.dtp.selected_layers) << '\n'
    << "top_k=" << c.dtp.top_k << '\n'
    << "sigma=" << n(c.dtp.gaussian_sigma) << '\n'
    << "corner_window=" << c.dtp.corner_window << '\n'
    << "corner_factor=" << n(c.dtp.corner_factor) << '\n'
    << "tolerance=" << n(c.dtp.tolerance) << '\n'
    << "max_prune=" << (c.dtp.max_prune ? std::to_string(*c.dtp.max_prune) : "none") << '\n'
    << "reuse_first_mask=" << b(c.dtp.reuse_first_mask) << "\n\n";

  o << "[task]\n"
    << "grid_h=" << c.task.grid_h << '\n'
    << "grid_w=" << c.task.grid_w << '\n'
    << "prompt=" << join(c.task.prompt_ids) << '\n'
    << "distractors=" << c.task.distractor_count << '\n'
    << "salience_min=" << n(c.task.salience_min) << '\n'
    << "salience_max=" << n(c.task.salience_max) << '\n'
    << "step_slack=" << c.task.step_slack << '\n'
    << "max_steps=" << c.task.max_steps << "\n\n";

  o << "[suite]\n"
    << "episodes=" << c.episodes << '\n'
    << "seed=" << c.seed << '\n'
    << "strategy=" << c.strategy << '\n'
    << "bins=" << c.bins << '\n'
    << "tau_grid=" << c.tau_grid << "\n\n";

  o << "[output]\n"
    << "dir=" << c.out_dir.generic_string() << '\n'
    << "heatmaps=" << b(c.export_heatmaps) << '\n'
    << "masks=" << b(c.export_masks) << '\n'
    << "logs=" << b(c.export_logs) << '\n';
  return o.str();
}

} // namespace dtp
