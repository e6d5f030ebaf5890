#include "dtp/planted_policy.hpp"

#include <cmath>
#include <string>

namespace dtp {

TaskSpec planted_task_spec() {
  TaskSpec spec;
  spec.step_slack = 0;
  return spec;
}

ModelConfig planted_model_config(int grid_h, int grid_w) {
  ModelConfig cfg;
  cfg.n_layers = 2;
  cfg.n_heads = 2;
  cfg.d_model = 32;
  cfg.grid_h = grid_h;
  cfg.grid_w = grid_w;
  cfg.action_vocab = kNumActions;
  cfg.prompt_vocab = 8;
  cfg.layout = Layout::image_before_prompt;
  return cfg;
}

Model build_planted_policy(const ModelConfig &cfg, const PlantedParams &params) {
  cfg.validate();
  if (cfg.d_model < channel::count)
    throw ConfigError("planted policy needs d_model >= " +
                      std::to_string(channel::count));
  if (cfg.head_dim() < 3)
    throw ConfigError("planted policy needs head_dim >= 3");
  if (cfg.n_layers < 2)
    throw ConfigError("planted policy needs at least two layers");
  if (cfg.action_vocab != kNumActions)
    throw ConfigError("planted policy uses the 7-action vocabulary");
  if (cfg.prompt_vocab < word::first_filler)
    throw ConfigError("planted policy needs prompt_vocab >= 4");
  if (cfg.layout != Layout::image_before_prompt)
    throw ConfigError("planted policy expects image_before_prompt layout");

  namespace ch = channel;
  const int d = cfg.d_model;
  // Attention logits are scaled by 1/sqrt(head_dim); undo that in the queries.
  const double qs = std::sqrt(static_cast<double>(cfg.head_dim()));

  Model model;
  model.config = cfg;
  model.system_embed = Vector::Zero(d);
  model.system_embed[ch::system_marker] = 1.0;
  model.prompt_embed = Matrix::Zero(cfg.prompt_vocab, d);
  for (int id = 0; id < cfg.prompt_vocab; ++id) {
    int c = ch::filler_word;
    if (id == word::pick || id == word::place)
      c = ch::verb_marker;
    else if (id == word::source)
      c = ch::source_word;
    else if (id == word::target)
      c = ch::target_word;
    model.prompt_embed(id, c) = 1.0;
  }
  model.action_embed = Matrix::Zero(cfg.action_vocab + 1, d);
  model.action_embed.col(ch::action_marker).setOnes();

  auto empty_layer = [d] {
    LayerWeights w;
    w.wq = w.wk = w.wv = w.wo = Matrix::Zero(d, d);
    w.w1 = w.w2 = Matrix::Zero(d, d);
    w.b1 = w.b2 = Vector::Zero(d);
    return w;
  };

  LayerWeights gripper = empty_layer();
  gripper.wq(ch::action_marker, 0) = params.gripper_gain * qs;
  gripper.wq(ch::verb_marker, 0) = params.gripper_gain * qs;
  gripper.wk(ch::gripper, 0) = 1.0;
  gripper.wv(ch::pos_row, 0) = 1.0;
  gripper.wv(ch::pos_col, 1) = 1.0;
  gripper.wv(ch::holding, 2) = 1.0;
  gripper.wo(0, ch::slot_grip_row) = 1.0;
  gripper.wo(1, ch::slot_grip_col) = 1.0;
  gripper.wo(2, ch::slot_hold) = 1.0;

  if (cfg.n_heads > 1) {
    const int h1 = cfg.head_dim();
    gripper.wv(ch::background, h1) = 1.0;
    gripper.wo(h1, ch::slot_scene) = 1.0;
  }

  LayerWeights task = empty_layer();
  const double beta = params.task_gain * qs;
  task.wq(ch::action_marker, 0) = beta;
  task.wq(ch::action_marker, 2) = params.distractor_pull * qs;
  task.wq(ch::slot_hold, 0) = -beta;
  task.wq(ch::slot_hold, 1) = beta;
  task.wq(ch::source_word, 0) = beta;
  task.wq(ch::target_word, 1) = beta;
  task.wk(ch::source, 0) = 1.0;
  task.wk(ch::target, 1) = 1.0;
  task.wk(ch::distractor, 2) = 1.0;
  task.wv(ch::pos_row, 0) = 1.0;
  task.wv(ch::pos_col, 1) = 1.0;
  task.wo(0, ch::slot_task_row) = 1.0;
  task.wo(1, ch::slot_task_col) = 1.0;

  if (cfg.n_heads > 1) {
    const int h1 = cfg.head_dim();
    task.wq(ch::action_marker, h1) = params.salience_gain * qs;
    task.wk(ch::distractor, h1) = 1.0;
  }

  // Rectified goal offsets.
  const int offsets[4][3] = {
      {ch::slot_task_row, ch::slot_grip_row, ch::slot_down},
      {ch::slot_grip_row, ch::slot_task_row, ch::slot_up},
      {ch::slot_task_col, ch::slot_grip_col, ch::slot_right},
      {ch::slot_grip_col, ch::slot_task_col, ch::slot_left},
  };
  for (int u = 0; u < 4; ++u) {
    task.w1(offsets[u][0], u) = 1.0;
    task.w1(offsets[u][1], u) = -1.0;
    task.w2(u, offsets[u][2]) = 1.0;
  }

  if (cfg.n_heads > 1) {
    // The action query sees system + image + prompt + itself.
    const double m = cfg.num_visual();
    const double reference = m / (m + 2.0 + params.reference_prompt_length);
    task.w1(ch::slot_scene, 4) = -1.0;
    task.b1[4] = reference - params.scene_margin;
    task.w2(4, ch::slot_overpruned) = 1.0;
  }

  model.layers.push_back(std::move(gripper));
  model.layers.push_back(std::move(task));
  for (int l = 2; l < cfg.n_layers; ++l)
    model.layers.push_back(empty_layer());

  const double g = params.readout_gain;
  auto col = [](Action a) { return static_cast<int>(a); };
  Matrix &r = model.readout;
  r = Matrix::Zero(d, cfg.action_vocab);
  model.readout_bias = Vector::Zero(cfg.action_vocab);

  r(ch::slot_up, col(Action::up)) = g;
  r(ch::slot_down, col(Action::up)) = -g;
  r(ch::slot_down, col(Action::down)) = g;
  r(ch::slot_up, col(Action::down)) = -g;
  r(ch::slot_left, col(Action::left)) = g;
  r(ch::slot_right, col(Action::left)) = -g;
  r(ch::slot_right, col(Action::right)) = g;
  r(ch::slot_left, col(Action::right)) = -g;
  // Vertical moves win exact ties so diagonal states stay decisive.
  model.readout_bias[col(Action::up)] = 0.25 * g;
  model.readout_bias[col(Action::down)] = 0.25 * g;

  for (int s : {ch::slot_up, ch::slot_down, ch::slot_left, ch::slot_right}) {
    r(s, col(Action::grasp)) = -g;
    r(s, col(Action::release)) = -g;
  }
  r(ch::slot_hold, col(Action::grasp)) = -1.2 * g;
  r(ch::slot_hold, col(Action::release)) = 1.2 * g;
  r(ch::slot_overpruned, col(Action::grasp)) = -params.overprune_penalty * g;
  r(ch::slot_overpruned, col(Action::release)) = -params.overprune_penalty * g;
  model.readout_bias[col(Action::grasp)] = 0.6 * g;
  model.readout_bias[col(Action::release)] = -0.6 * g;
  model.readout_bias[col(Action::noop)] = -2.0 * g;
  return model;
}

} // namespace dtp
