#include "dtp/simworld.hpp"

#include "dtp/rng.hpp"

#include <cstdlib>
#include <numeric>

namespace dtp {

std::string_view action_name(Action a) {
  static constexpr std::array<std::string_view, kNumActions> names{
      "up", "down", "left", "right", "grasp", "release", "noop"};
  return names[static_cast<int>(a)];
}

void TaskSpec::validate() const {
  if (grid_h < 1 || grid_w < 1 || grid_h * grid_w < 4)
    throw ConfigError("task grid must hold at least 4 cells");
  if (d_model < channel::count)
    throw ConfigError("d_model too small for the world's embedding channels");
  if (prompt_ids.empty())
    throw ConfigError("prompt must not be empty");
  if (distractor_count < 0)
    throw ConfigError("distractor_count must be >= 0");
  if (salience_min < 0.0 || salience_max < salience_min)
    throw ConfigError("distractor salience range must be nonnegative and ordered");
  if (max_steps < 0)
    throw ConfigError("max_steps must be >= 0");
  // gripper + source + target + distractors, leaving one free cell
  if (3 + distractor_count >= grid_h * grid_w)
    throw ConfigError("grid too small for the requested objects");
}

namespace {

Vector one_hot(int d, int channel) {
  Vector v = Vector::Zero(d);
  v[channel] = 1.0;
  return v;
}

Cell to_cell(int index, int grid_w) { return {index / grid_w, index % grid_w}; }

int manhattan(Cell a, Cell b) {
  return std::abs(a.row - b.row) + std::abs(a.col - b.col);
}

} // namespace

WorldState init_world(const TaskSpec &spec) {
  spec.validate();
  const int m = spec.grid_h * spec.grid_w;
  Rng rng(spec.seed);
  std::vector<int> cells(m);
  std::iota(cells.begin(), cells.end(), 0);
  const auto picked =
      rng.sample_without_replacement(std::move(cells), 3 + spec.distractor_count);

  WorldState w;
  w.grid_h = spec.grid_h;
  w.grid_w = spec.grid_w;
  w.gripper = to_cell(picked[0], spec.grid_w);
  w.max_steps =
      spec.max_steps > 0 ? spec.max_steps : 4 * (spec.grid_h + spec.grid_w);
  w.objects.push_back({ObjectKind::source, to_cell(picked[1], spec.grid_w),
                       one_hot(spec.d_model, channel::source), 1.0});
  w.objects.push_back({ObjectKind::target, to_cell(picked[2], spec.grid_w),
                       one_hot(spec.d_model, channel::target), 1.0});
  for (int i = 0; i < spec.distractor_count; ++i) {
    const double s = rng.uniform(spec.salience_min, spec.salience_max);
    w.objects.push_back({ObjectKind::distractor,
                         to_cell(picked[3 + i], spec.grid_w),
                         one_hot(spec.d_model, channel::distractor), s});
  }
  if (spec.step_slack >= 0)
    w.max_steps = plan_length(w) + spec.step_slack;
  return w;
}

Matrix render_tokens(const WorldState &world) {
  const int d = static_cast<int>(world.objects.front().feature.size());
  const int m = world.grid_h * world.grid_w;
  Matrix out = Matrix::Zero(m, d);
  for (int v = 0; v < m; ++v) {
    out(v, channel::background) = 1.0;
    out(v, channel::pos_row) = v / world.grid_w;
    out(v, channel::pos_col) = v % world.grid_w;
  }
  for (const auto &o : world.objects)
    out.row(world.index(o.cell)) += o.salience * o.feature.transpose();
  const int g = world.index(world.gripper);
  out(g, channel::gripper) += 1.0;
  out(g, channel::holding) += world.holding ? 1.0 : 0.0;
  return out;
}

WorldState step(const WorldState &world, Action action) {
  WorldState w = world;
  Cell &g = w.gripper;
  switch (action) {
  case Action::up:
    g.row = std::max(0, g.row - 1);
    break;
  case Action::down:
    g.row = std::min(w.grid_h - 1, g.row + 1);
    break;
  case Action::left:
    g.col = std::max(0, g.col - 1);
    break;
  case Action::right:
    g.col = std::min(w.grid_w - 1, g.col + 1);
    break;
  case Action::grasp:
    if (!w.holding && g == w.source().cell)
      w.holding = true;
    break;
  case Action::release:
    w.holding = false;
    break;
  case Action::noop:
    break;
  }
  if (w.holding)
    w.objects[0].cell = g;
  ++w.step_count;
  return w;
}

bool is_success(const WorldState &world) {
  return !world.holding && world.source().cell == world.target().cell;
}

int plan_length(const WorldState &world) {
  if (is_success(world))
    return 0;
  const Cell t = world.target().cell;
  if (world.holding)
    return manhattan(world.gripper, t) + 1;
  const Cell s = world.source().cell;
  return manhattan(world.gripper, s) + 1 + manhattan(s, t) + 1;
}

std::vector<Action> oracle_actions(const WorldState &world) {
  std::vector<Action> out;
  const int current = plan_length(world);
  for (int a = 0; a < kNumActions; ++a)
    if (plan_length(step(world, static_cast<Action>(a))) < current)
      out.push_back(static_cast<Action>(a));
  return out;
}

} // namespace dtp
