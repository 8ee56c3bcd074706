#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <beamlearn/beamlearn.hpp>

namespace {

struct CommonFlags {
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<double> delta;
  std::string preset;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool config_required) {
  auto* config = cmd->add_option("--config", flags.config_path, "run configuration file");
  if (config_required) config->required();
  cmd->add_option("--out", flags.out_dir, "output directory");
  cmd->add_option("--seed", flags.seed, "override the run seed");
  cmd->add_option("--delta", flags.delta, "override the confidence level");
  cmd->add_option("--preset", flags.preset, "named strategy/loss combination");
}

beamlearn::RunConfig resolve_config(const CommonFlags& flags) {
  beamlearn::RunConfig cfg = beamlearn::load_config(flags.config_path);
  if (flags.seed) cfg.seed = *flags.seed;
  if (flags.delta) cfg.delta = *flags.delta;
  if (!flags.preset.empty()) cfg.preset = flags.preset;
  return cfg;
}

std::vector<std::string> drop_empty(std::vector<std::string> items, const char* what) {
  std::vector<std::string> out;
  for (auto& s : items)
    if (!s.empty()) out.push_back(std::move(s));
  if (!items.empty() && out.empty())
    throw beamlearn::ConfigError(std::string(what) + " list is empty");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"learn and evaluate beam search scoring policies"};
  app.require_subcommand(1);

  CommonFlags train_flags;
  auto* train = app.add_subcommand("train", "train a scorer and write metrics");
  add_common(train, train_flags, true);

  CommonFlags eval_flags;
  std::string model_path;
  auto* evaluate = app.add_subcommand("evaluate", "decode a dataset with a saved model");
  add_common(evaluate, eval_flags, true);
  evaluate->add_option("--model", model_path, "saved model parameters")->required();

  CommonFlags cmp_flags;
  std::vector<std::string> losses, strategies, presets;
  auto* compare = app.add_subcommand("compare", "sweep losses, strategies, or presets");
  add_common(compare, cmp_flags, true);
  compare->add_option("--losses", losses, "losses to sweep")->delimiter(',');
  compare->add_option("--strategies", strategies, "collection strategies to sweep")
      ->delimiter(',');
  compare->add_option("--presets", presets, "presets to sweep")->delimiter(',');

  auto* check = app.add_subcommand("check", "run the reference self-check suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help() << std::flush;
    return 2;
  }

  try {
    if (train->parsed()) {
      const beamlearn::TrainOutcome outcome =
          beamlearn::train_run(resolve_config(train_flags), train_flags.out_dir);
      const auto& res = outcome.result;
      std::cout << "rounds " << res.tracker.rounds() << "  mean surrogate "
                << beamlearn::fmt_g(res.tracker.mean_loss()) << "  mean terminal cost "
                << beamlearn::fmt_g(res.tracker.mean_terminal_cost());
      if (!std::isnan(res.final_validation_cost))
        std::cout << "  validation cost " << beamlearn::fmt_g(res.final_validation_cost);
      if (res.final_gamma_hat)
        std::cout << "  gamma_hat " << beamlearn::fmt_g(*res.final_gamma_hat)
                  << (res.gamma_certified ? "" : " (not certified)");
      std::cout << "\noutputs written to " << train_flags.out_dir << "\n";
      return 0;
    }
    if (evaluate->parsed()) {
      const auto j =
          beamlearn::evaluate_run(resolve_config(eval_flags), model_path, eval_flags.out_dir);
      std::cout << j.dump(2) << "\n";
      return 0;
    }
    if (compare->parsed()) {
      const auto rows = beamlearn::compare_run(
          resolve_config(cmp_flags), drop_empty(losses, "loss"),
          drop_empty(strategies, "strategy"), drop_empty(presets, "preset"),
          cmp_flags.out_dir);
      bool any_error = false;
      for (const auto& r : rows) {
        std::cout << r.name << ": ";
        if (!r.error.empty()) {
          std::cout << "error: " << r.error << "\n";
          any_error = true;
          continue;
        }
        std::cout << "mean terminal cost " << beamlearn::fmt_g(r.mean_terminal_cost);
        if (!std::isnan(r.final_validation_cost))
          std::cout << "  validation cost " << beamlearn::fmt_g(r.final_validation_cost);
        std::cout << "\n";
      }
      std::cout << "table written to " << cmp_flags.out_dir << "/compare.csv\n";
      return any_error ? 1 : 0;
    }
    if (check->parsed()) {
      return beamlearn::check_report(std::cout) ? 0 : 1;
    }
  } catch (const beamlearn::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
