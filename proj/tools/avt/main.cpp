#include <algorithm>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>

#include "CLI11.hpp"
#include "commands.hpp"

using namespace avt;
using namespace avt::cli;

namespace {

struct Subcommand {
  CLI::App* app = nullptr;
  KeyValueConfig defaults;
  std::string config_file;
  std::vector<std::string> sets;
  std::vector<std::pair<std::string, std::string>> flags;
  bool force = false;

  RunConfig build() const {
    RunConfig cfg(defaults);
    if (!config_file.empty()) cfg.apply_file(config_file);
    for (const auto& [k, v] : flags) cfg.apply(k, v, "--" + k);
    for (const auto& s : sets) cfg.apply_assignment(s);
    return cfg;
  }
};

std::string dashed(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

// Every config key doubles as a --flag; flags override the config file.
Subcommand& add(CLI::App& root, std::map<std::string, std::unique_ptr<Subcommand>>& subs, const std::string& name,
                const std::string& help, KeyValueConfig defaults) {
  auto sub = std::make_unique<Subcommand>();
  sub->app = root.add_subcommand(name, help);
  sub->defaults = std::move(defaults);
  auto* s = sub.get();
  s->app->add_option("-c,--config", s->config_file, "flat key = value config file")->check(CLI::ExistingFile);
  s->app->add_option("--set", s->sets, "override any config key: key=value (repeatable)");
  for (const auto& key : s->defaults.keys()) {
    s->app->add_option_function<std::string>(
        "--" + dashed(key), [s, key](const std::string& v) { s->flags.emplace_back(key, v); },
        "config key '" + key + "' (default: " + (s->defaults.require(key).empty() ? "none" : s->defaults.require(key)) + ")");
  }
  auto& ref = *sub;
  subs[name] = std::move(sub);
  return ref;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"avt: anticipative video transformer toolkit"};
  app.require_subcommand(1);
  std::map<std::string, std::unique_ptr<Subcommand>> subs;

  auto& gen = add(app, subs, "gen", "generate a synthetic action-schema dataset", gen_defaults());
  gen.app->add_flag("--force", gen.force, "overwrite a non-empty output directory");
  add(app, subs, "stat", "print dataset statistics", stat_defaults());
  auto& train = add(app, subs, "train", "train a model", train_defaults());
  bool resume = false;
  train.app->add_flag("--force", train.force, "overwrite a non-empty output directory");
  train.app->add_flag("--resume", resume, "continue from <out>/last.ckpt");
  auto& eval = add(app, subs, "eval", "evaluate a checkpoint and write predictions", eval_defaults());
  eval.app->add_flag("--force", eval.force, "overwrite a non-empty output directory");
  auto& fuse = add(app, subs, "fuse", "late-fuse prediction files", fuse_defaults());
  fuse.app->add_flag("--force", fuse.force, "overwrite a non-empty output directory");
  fuse.app->add_option_function<std::vector<std::string>>(
      "--pred", [&fuse](const std::vector<std::string>& v) {
        std::string joined;
        for (const auto& p : v) joined += (joined.empty() ? "" : ",") + p;
        fuse.flags.emplace_back("predictions", joined);
      },
      "prediction file (repeatable)");
  fuse.app->add_option_function<std::vector<std::string>>(
      "--weight", [&fuse](const std::vector<std::string>& v) {
        std::string joined;
        for (const auto& w : v) joined += (joined.empty() ? "" : ",") + w;
        fuse.flags.emplace_back("weights", joined);
      },
      "fusion weight per file (repeatable)");
  auto& roll = add(app, subs, "rollout", "long-term anticipation by feature re-injection", rollout_defaults());
  roll.app->add_flag("--force", roll.force, "overwrite a non-empty output directory");
  auto& attn = add(app, subs, "attn", "export temporal and spatial attention maps", attn_defaults());
  attn.app->add_flag("--force", attn.force, "overwrite a non-empty output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    for (const auto& [name, sub] : subs) {
      if (!sub->app->parsed()) continue;
      const auto cfg = sub->build();
      if (name == "gen") return cmd_gen(cfg, sub->force);
      if (name == "stat") return cmd_stat(cfg);
      if (name == "train") return cmd_train(cfg, sub->force, resume);
      if (name == "eval") return cmd_eval(cfg, sub->force);
      if (name == "fuse") return cmd_fuse(cfg, sub->force);
      if (name == "rollout") return cmd_rollout(cfg, sub->force);
      if (name == "attn") return cmd_attn(cfg, sub->force);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "avt: error: %s\n", e.what());
    return exit_code_for(e);
  }
  return kRuntime;
}
