#include "dtp/episode.hpp"

#include "dtp/rng.hpp"
#include "dtp/statistics.hpp"

#include <array>
#include <string>

namespace dtp {

namespace {
constexpr std::array<std::string_view, 5> kStrategyNames{
    "off", "dtp", "random_all", "random_unimportant", "no_gaussian"};
}

std::string_view strategy_name(Strategy s) {
  return kStrategyNames[static_cast<int>(s)];
}

Strategy parse_strategy(std::string_view name) {
  for (std::size_t i = 0; i < kStrategyNames.size(); ++i)
    if (kStrategyNames[i] == name)
      return static_cast<Strategy>(i);
  throw UsageError("unknown strategy '" + std::string(name) + "'");
}

std::size_t EpisodeLog::total_pruned() const {
  std::size_t n = 0;
  for (const auto &s : steps)
    n += s.pruned.size();
  return n;
}

EpisodeLog run_episode(const Model &model, const TaskSpec &spec,
                       const DtpConfig &dtp, Strategy strategy,
                       const EpisodeOptions &options) {
  const ModelConfig &mc = model.config;
  if (spec.grid_h != mc.grid_h || spec.grid_w != mc.grid_w ||
      spec.d_model != mc.d_model)
    throw ConfigError("task and model disagree on grid or embedding size");
  dtp.validate(mc);

  EpisodeLog log;
  log.seed = spec.seed;
  log.strategy = strategy;
  log.tolerance = dtp.tolerance;

  WorldState world = init_world(spec);
  std::optional<ImportantRegion> first_region;
  std::optional<RelevanceHeatmap> first_relevance;

  while (!is_success(world) && world.step_count < world.max_steps) {
    const TokenSequence seq =
        TokenSequence::build(mc, spec.prompt_ids, render_tokens(world));
    const Generation baseline = generate_action_token(model, seq);

    const bool biased = strategy != Strategy::no_gaussian;
    RelevanceHeatmap relevance;
    ImportantRegion region;
    if (dtp.reuse_first_mask && first_region) {
      relevance = *first_relevance;
      region = *first_region;
    } else {
      relevance = build_relevance(baseline.capture, dtp);
      if (biased)
        relevance = apply_spatial_bias(relevance, dtp);
      region = select_important_region(relevance, dtp.top_k);
      if (dtp.reuse_first_mask) {
        first_relevance = relevance;
        first_region = region;
      }
    }

    const VisualAttentionPattern pattern =
        build_attention_pattern(baseline.capture);
    StepRecord rec;
    rec.step = world.step_count;
    rec.baseline_action = static_cast<Action>(baseline.token);
    rec.unimportant_attention = unimportant_attention(pattern, region);
    rec.decision = detect_distracting_tokens(pattern, region, dtp.tolerance);
    PruneMask targeted = apply_prune_policy(rec.decision, dtp);

    PruneMask mask;
    switch (strategy) {
    case Strategy::off:
      break;
    case Strategy::dtp:
    case Strategy::no_gaussian:
      mask = targeted;
      break;
    case Strategy::random_all:
      mask = sample_random_prune(region, targeted.size(), PruneScope::all_region,
                                 mix_seed(spec.seed, world.step_count));
      break;
    case Strategy::random_unimportant:
      mask = sample_random_prune(region, targeted.size(),
                                 PruneScope::unimportant_region,
                                 mix_seed(spec.seed, world.step_count));
      break;
    }

    rec.forward_passes = 1;
    const Generation *executed = &baseline;
    Generation refined;
    if (!mask.empty()) {
      refined = regenerate_with_pruning(model, seq, mask);
      executed = &refined;
      ++rec.forward_passes;
    }
    rec.action = static_cast<Action>(executed->token);
    rec.logits = executed->logits;
    rec.pruned = mask.indices();

    const auto oracle = oracle_actions(world);
    rec.oracle_size = static_cast<int>(oracle.size());
    rec.entropy = performance_score(
        conditional_entropy(rec.logits),
        baseline_entropy(oracle.size(), mc.action_vocab));
    if (options.keep_patterns)
      rec.pattern = pattern.a;

    if (options.on_step) {
      StepTrace trace{world.step_count, &world, &relevance, &region, &pattern,
                      &mask};
      options.on_step(trace);
    }

    world = step(world, rec.action);
    if (world.holding)
      log.grasp = true;
    log.steps.push_back(std::move(rec));
  }

  log.success = is_success(world);
  log.steps_taken = world.step_count;
  return log;
}

std::vector<EpisodeLog> run_suite(const Model &model, const TaskSpec &base,
                                  int episodes, std::uint64_t seed_base,
                                  const DtpConfig &dtp, Strategy strategy) {
  if (episodes < 1)
    throw ConfigError("suite needs at least one episode");
  std::vector<EpisodeLog> logs;
  logs.reserve(episodes);
  for (int i = 0; i < episodes; ++i) {
    TaskSpec spec = base;
    spec.seed = seed_base + static_cast<std::uint64_t>(i);
    logs.push_back(run_episode(model, spec, dtp, strategy));
  }
  return logs;
}

} // namespace dtp
