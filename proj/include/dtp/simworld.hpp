#pragma once

#include "dtp/types.hpp"

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

namespace dtp {

/// Embedding channels shared by the renderer and the planted policy.
namespace channel {
inline constexpr int system_marker = 0;
inline constexpr int action_marker = 1;
inline constexpr int verb_marker = 2;
inline constexpr int source_word = 3;
inline constexpr int target_word = 4;
inline constexpr int filler_word = 5;
inline constexpr int background = 6;
inline constexpr int pos_row = 7;
inline constexpr int pos_col = 8;
inline constexpr int gripper = 9;
inline constexpr int holding = 10;
inline constexpr int source = 11;
inline constexpr int target = 12;
inline constexpr int distractor = 13;
// Residual slots written by the planted policy.
inline constexpr int slot_grip_row = 14;
inline constexpr int slot_grip_col = 15;
inline constexpr int slot_hold = 16;
inline constexpr int slot_task_row = 17;
inline constexpr int slot_task_col = 18;
inline constexpr int slot_down = 19;  // relu(task_row - grip_row)
inline constexpr int slot_up = 20;    // relu(grip_row - task_row)
inline constexpr int slot_right = 21; // relu(task_col - grip_col)
inline constexpr int slot_left = 22;  // relu(grip_col - task_col)
inline constexpr int slot_scene = 23;       // visible share of image tokens
inline constexpr int slot_overpruned = 24;  // relu(reference - margin - scene)
inline constexpr int count = 25;
} // namespace channel

/// Prompt vocabulary understood by the planted policy.
namespace word {
inline constexpr int pick = 0;
inline constexpr int place = 1;
inline constexpr int source = 2;
inline constexpr int target = 3;
inline constexpr int first_filler = 4;
} // namespace word

enum class Action : int { up = 0, down, left, right, grasp, release, noop };
inline constexpr int kNumActions = 7;
std::string_view action_name(Action a);

enum class ObjectKind { source, target, distractor };

struct Cell {
  int row = 0;
  int col = 0;
  friend bool operator==(const Cell &, const Cell &) = default;
};

struct WorldObject {
  ObjectKind kind;
  Cell cell;
  Vector feature;
  double salience = 1.0;
};

struct WorldState {
  int grid_h = 0;
  int grid_w = 0;
  Cell gripper;
  bool holding = false;
  std::vector<WorldObject> objects; ///< objects[0] is the source, objects[1] the target
  int step_count = 0;
  int max_steps = 0;

  int index(Cell c) const { return c.row * grid_w + c.col; }
  const WorldObject &source() const { return objects[0]; }
  const WorldObject &target() const { return objects[1]; }
};

struct TaskSpec {
  int grid_h = 8;
  int grid_w = 8;
  int d_model = 32;
  std::vector<int> prompt_ids{word::pick, word::source, word::place, word::target};
  int distractor_count = 3;
  double salience_min = 0.4;
  double salience_max = 1.4;
  std::uint64_t seed = 0;
  /// When >= 0, the step budget is the initial optimal plan length plus this
  /// many steps. Otherwise max_steps applies.
  int step_slack = -1;
  int max_steps = 0; ///< 0 selects 4 * (grid_h + grid_w)

  void validate() const;
};

/// Seeded placement of gripper, source, target and distractors on distinct
/// cells. At least one cell stays empty.
WorldState init_world(const TaskSpec &spec);

/// Background plus position per cell, plus each object's feature * salience
/// and the gripper marker at its cell. Returns M x d.
Matrix render_tokens(const WorldState &world);

/// Moves clamp at walls; grasp only on the source cell; a held source moves
/// with the gripper. Illegal grasp/release are no-ops.
WorldState step(const WorldState &world, Action action);

bool is_success(const WorldState &world);

/// Length of the shortest action plan that reaches success.
int plan_length(const WorldState &world);

/// Actions that strictly shorten the shortest plan. Empty only at success.
std::vector<Action> oracle_actions(const WorldState &world);

} // namespace dtp
