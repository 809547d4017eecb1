#pragma once

#include "run_config.hpp"

namespace avt::cli {

KeyValueConfig gen_defaults();
KeyValueConfig stat_defaults();
KeyValueConfig train_defaults();
KeyValueConfig eval_defaults();
KeyValueConfig fuse_defaults();
KeyValueConfig rollout_defaults();
KeyValueConfig attn_defaults();

int cmd_gen(const RunConfig& cfg, bool force);
int cmd_stat(const RunConfig& cfg);
int cmd_train(const RunConfig& cfg, bool force, bool resume);
int cmd_eval(const RunConfig& cfg, bool force);
// Prediction files and weights come as comma-separated lists.
int cmd_fuse(const RunConfig& cfg, bool force);
int cmd_rollout(const RunConfig& cfg, bool force);
int cmd_attn(const RunConfig& cfg, bool force);

}  // namespace avt::cli
