#pragma once

#include "dtp/attention_core.hpp"
#include "dtp/simworld.hpp"

namespace dtp {

/// Attention sharpness and readout scale of the constructed policy. The
/// defaults are the calibrated planted suite; distractor_pull = 0 gives a
/// policy that never looks at distractors.
struct PlantedParams {
  double gripper_gain = 12.0; ///< layer-0 logit on the gripper cell
  double task_gain = 30.0;    ///< layer-1 logit on the current goal object
  double distractor_pull = 24.0; ///< layer-1 logit per unit distractor salience
  /// Logit per unit salience of the second layer-1 head, which looks at
  /// distractors but writes nothing to the residual stream.
  double salience_gain = 6.0;
  /// Grasp/release penalty per unit drop of the visible image share below
  /// its full-image value (minus `scene_margin`).
  double overprune_penalty = 20.0;
  double scene_margin = 0.03;
  /// Prompt length the full-image reference is computed for.
  int reference_prompt_length = 4;
  double readout_gain = 16.0;
};

/// Task defaults of the calibrated suite: three distractors and a budget of
/// the shortest plan with no slack, so every wasted step costs the episode.
TaskSpec planted_task_spec();

/// Model config the planted policy is built for on a given grid.
ModelConfig planted_model_config(int grid_h = 8, int grid_w = 8);

/// Hand-constructed two-stage policy:
///  - layer 0, head 0 reads the gripper cell (position and holding flag);
///  - layer 1, head 0 reads the position of the current goal (source while
///    empty-handed, target while holding), but its query also carries a
///    component matching the distractor channel, so salient distractors pull
///    attention away from the goal;
///  - layer 0, head 1 (when present) attends uniformly and measures which
///    share of the visible tokens are image tokens; heavy pruning lowers it
///    and the readout then suppresses grasp/release;
///  - layer 1, head 1 (when present) attends salient distractors without
///    affecting the output;
///  - the layer-1 MLP and readout turn the goal-minus-gripper offset into
///    move/grasp/release logits.
/// Prompt tokens query the same heads without the distractor component, so
/// prompt-to-image relevance marks gripper, source and target only.
Model build_planted_policy(const ModelConfig &cfg, const PlantedParams &params);

inline Model build_planted_policy(const ModelConfig &cfg, double distractor_pull) {
  PlantedParams p;
  p.distractor_pull = distractor_pull;
  return build_planted_policy(cfg, p);
}

} // namespace dtp
