#include "commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "avt/attention.hpp"
#include "avt/checkpoint.hpp"
#include "avt/dataset.hpp"
#include "avt/errors.hpp"
#include "avt/metrics.hpp"
#include "avt/predictions.hpp"
#include "avt/rollout.hpp"
#include "avt/schema.hpp"
#include "avt/trainer.hpp"

namespace avt::cli {

namespace fs = std::filesystem;

namespace {

KeyValueConfig with(std::initializer_list<std::pair<const char*, const char*>> entries) {
  KeyValueConfig c;
  for (const auto& [k, v] : entries) c.set(k, v);
  return c;
}

Dataset load_dataset(const RunConfig& cfg) {
  const auto& path = cfg.str("data");
  if (path.empty()) throw ConfigError("data: a dataset directory is required");
  return Dataset::load(path);
}

ClipSpec clip_from(const KeyValueConfig& kv, const std::string& prefix = "") {
  ClipSpec c;
  c.observe = static_cast<long>(parse_int64(kv.require(prefix + "observe")));
  c.anticipate = static_cast<long>(parse_int64(kv.require(prefix + "anticipate")));
  c.stride = static_cast<long>(parse_int64(kv.require(prefix + "stride")));
  c.validate();
  return c;
}

Split parse_split(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "all") return Split::All;
  throw ConfigError("split must be train, val or all, got '" + s + "'");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

ModelConfig model_for(const RunConfig& cfg, const Dataset& ds, const ClipSpec& clip) {
  const std::size_t k = ds.vocab.num_actions();
  ModelConfig m = ModelConfig::from_preset(cfg.str("preset"), k, ds.dim());
  if (m.mode == BackboneMode::Frames) {
    if (!ds.frames()) throw ConfigError("preset " + m.preset + " needs a frames dataset; use preset fixed-features");
    const auto spec = SchemaSpec::read(ds.manifest);
    m.backbone.image_size = spec.image_size;
    m.backbone.channels = spec.channels;
    m.backbone.patch_size = spec.patch_size;
    if (m.input_dim() != ds.dim())
      throw DimensionError("dataset rows have " + std::to_string(ds.dim()) + " values, model expects " +
                           std::to_string(m.input_dim()));
  }
  if (const auto v = cfg.uinteger("head_dim")) m.head.head_dim = v;
  if (const auto v = cfg.uinteger("head_layers")) m.head.num_layers = v;
  if (const auto v = cfg.uinteger("head_heads")) m.head.num_heads = v;
  if (const auto v = cfg.uinteger("max_len")) m.head.max_len = v;
  m.validate();
  if (clip.length() > m.head.max_len)
    throw ConfigError("clip length " + std::to_string(clip.length()) + " exceeds max_len " +
                      std::to_string(m.head.max_len));
  return m;
}

TrainOptions train_options(const RunConfig& cfg) {
  TrainOptions o;
  o.mode = parse_training_mode(cfg.str("mode"));
  o.epochs = static_cast<int>(cfg.integer("epochs"));
  o.warmup_epochs = static_cast<int>(cfg.integer("warmup"));
  o.batch_size = cfg.uinteger("batch_size");
  o.optimizer.base_lr = cfg.number("lr");
  o.optimizer.momentum = cfg.number("momentum");
  o.optimizer.weight_decay = cfg.number("weight_decay");
  o.freeze_backbone = cfg.flag("freeze_backbone");
  o.seed = cfg.uinteger("seed");
  const auto& fl = cfg.str("feature_loss");
  if (fl == "l2") o.objective.feature_loss = FeatureLoss::L2;
  else if (fl == "infonce") o.objective.feature_loss = FeatureLoss::InfoNce;
  else throw ConfigError("feature_loss must be l2 or infonce, got '" + fl + "'");
  o.objective.nce_temperature = cfg.number("nce_temperature");
  o.validate();
  return o;
}

struct LoadedModel {
  Checkpoint ckpt;
  AnticipativeModel<float> model;
};

LoadedModel load_model(const std::string& path) {
  if (path.empty()) throw ConfigError("checkpoint: a checkpoint file is required");
  auto ckpt = load_checkpoint(path);
  AnticipativeModel<float> model(ckpt.model, 0);
  restore_model(ckpt, model);
  return {std::move(ckpt), std::move(model)};
}

void require_vocab(const Checkpoint& ckpt, const Dataset& ds) {
  if (ckpt.vocab_hash != ds.vocab.hash()) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "vocabulary mismatch: checkpoint %016llx, dataset %016llx",
                  static_cast<unsigned long long>(ckpt.vocab_hash), static_cast<unsigned long long>(ds.vocab.hash()));
    throw VocabularyError(buf);
  }
}

// Clip geometry of a checkpoint's training run, overridable from the command.
ClipSpec clip_for(const Checkpoint& ckpt, const RunConfig& cfg) {
  KeyValueConfig kv;
  for (const char* key : {"observe", "anticipate", "stride"}) {
    const auto& v = cfg.str(key);
    if (!v.empty()) kv.set(key, v);
    else if (auto m = ckpt.meta.get(std::string("run.") + key)) kv.set(key, *m);
    else throw ConfigError(std::string(key) + ": not recorded in checkpoint; pass it explicitly");
  }
  return clip_from(kv);
}

const AnticipationSample& find_sample(const std::vector<AnticipationSample>& samples, std::uint64_t id) {
  for (const auto& s : samples)
    if (s.id == id) return s;
  throw IndexError("sample " + std::to_string(id) + " does not exist (or its segment has no observable clip)");
}

Tensor<float> clip_tensor(const AnticipationSample& s) {
  return Tensor<float>(Shape{1, s.length(), s.dim}, std::vector<float>(s.inputs.begin(), s.inputs.end()));
}

std::string metrics_line(const MetricSummary& m) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "n=%zu top1=%.4f top5=%.4f recall5=%.4f", m.count, m.top1, m.top5, m.recall5);
  return buf;
}

}  // namespace

KeyValueConfig gen_defaults() {
  KeyValueConfig c;
  SchemaSpec{}.write(c);
  c.set("train_videos", "64");
  c.set("val_videos", "16");
  c.set("video_len", "70");
  c.set("out", "");
  return c;
}

KeyValueConfig stat_defaults() { return with({{"data", ""}, {"observe", "10"}, {"anticipate", "1"}, {"stride", "0"}}); }

KeyValueConfig train_defaults() {
  return with({{"data", ""},
               {"preset", "fixed-features"},
               {"mode", "anticipative"},
               {"epochs", "50"},
               {"warmup", "20"},
               {"lr", "1e-4"},
               {"momentum", "0.9"},
               {"weight_decay", "1e-6"},
               {"batch_size", "16"},
               {"freeze_backbone", "false"},
               {"feature_loss", "l2"},
               {"nce_temperature", "0.1"},
               {"observe", "10"},
               {"anticipate", "1"},
               {"stride", "0"},
               {"head_dim", "0"},
               {"head_layers", "0"},
               {"head_heads", "0"},
               {"max_len", "0"},
               {"seed", "0"},
               {"stop_after", "0"},
               {"out", ""}});
}

KeyValueConfig eval_defaults() {
  return with({{"checkpoint", ""}, {"data", ""}, {"split", "val"}, {"observe", ""}, {"anticipate", ""}, {"stride", ""}, {"out", ""}});
}

KeyValueConfig fuse_defaults() { return with({{"predictions", ""}, {"weights", ""}, {"vocab", ""}, {"out", ""}}); }

KeyValueConfig rollout_defaults() {
  return with({{"checkpoint", ""}, {"data", ""}, {"sample_id", "0"}, {"steps", "8"}, {"observe", ""}, {"anticipate", ""}, {"stride", ""}, {"out", ""}});
}

KeyValueConfig attn_defaults() {
  return with({{"checkpoint", ""}, {"data", ""}, {"sample_id", "0"}, {"spatial", "auto"}, {"observe", ""}, {"anticipate", ""}, {"stride", ""}, {"out", ""}});
}

int cmd_gen(const RunConfig& cfg, bool force) {
  const auto spec = SchemaSpec::read(cfg.values());
  spec.validate();
  const auto train = cfg.uinteger("train_videos"), val = cfg.uinteger("val_videos"), len = cfg.uinteger("video_len");
  if (train == 0) throw ConfigError("train_videos must be positive");
  const auto out = resolve_output(cfg.str("out"), "dataset");
  prepare_output(out, force);
  const auto ds = make_schema_dataset(spec, train, val, len);
  ds.save(out);
  write_snapshot(out, "gen", cfg.values());
  const ActionSchema schema(spec);
  std::printf("wrote %s: %zu videos, %zu segments, dim %zu\n", out.string().c_str(), ds.videos.size(),
              ds.segments.size(), ds.dim());
  std::printf("order-1 Bayes rate %.4f, order-%zu Bayes rate %.4f\n", schema.bayes_rate(1), spec.order,
              schema.bayes_rate(spec.order));
  return kOk;
}

int cmd_stat(const RunConfig& cfg) {
  const auto ds = load_dataset(cfg);
  const auto clip = clip_from(cfg.values());
  std::vector<std::size_t> per_video(ds.videos.size(), 0);
  for (const auto& s : ds.segments) ++per_video[s.video_id];
  std::size_t chain_total = 0;
  for (auto n : per_video) chain_total += n;
  std::vector<std::string> skipped;
  const auto train = ds.samples(clip, Split::Train, &skipped);
  const auto val = ds.samples(clip, Split::Val, &skipped);
  std::printf("videos %zu (train %zu, val %zu)\n", ds.videos.size(), ds.train_videos, ds.videos.size() - ds.train_videos);
  std::printf("segments %zu\nchain length total %zu\n", ds.segments.size(), chain_total);
  std::printf("actions %zu, verbs %zu, nouns %zu, dim %zu, vocab hash %016llx\n", ds.vocab.num_actions(),
              ds.vocab.num_verbs(), ds.vocab.num_nouns(), ds.dim(), static_cast<unsigned long long>(ds.vocab.hash()));
  std::printf("samples train %zu, val %zu, skipped %zu (clip length %zu)\n", train.size(), val.size(), skipped.size(),
              clip.length());
  if (ds.manifest.has("concentration")) {
    const ActionSchema schema(SchemaSpec::read(ds.manifest));
    std::printf("order-1 Bayes rate %.4f, order-%zu Bayes rate %.4f\n", schema.bayes_rate(1), schema.spec().order,
                schema.bayes_rate(schema.spec().order));
  }
  return kOk;
}

int cmd_train(const RunConfig& cfg, bool force, bool resume) {
  const auto ds = load_dataset(cfg);
  const auto clip = clip_from(cfg.values());
  auto options = train_options(cfg);
  const auto out = resolve_output(cfg.str("out"), "run");
  const auto train = ds.samples(clip, Split::Train);
  const auto val = ds.samples(clip, Split::Val);
  if (train.empty()) throw ConfigError("training split has no samples");

  std::optional<Checkpoint> previous;
  if (resume) {
    if (!fs::exists(out / "last.ckpt")) throw ConfigError("nothing to resume: " + (out / "last.ckpt").string() + " not found");
    previous = load_checkpoint(out / "last.ckpt");
    require_vocab(*previous, ds);
  } else {
    prepare_output(out, force);
  }
  const ModelConfig mcfg = previous ? previous->model : model_for(cfg, ds, clip);
  AnticipativeModel<float> model(mcfg, options.seed);
  Trainer<float> trainer(model, options);
  double best = -1.0;
  if (previous) {
    restore_model(*previous, model);
    restore_optimizer(*previous, trainer.optimizer());
    trainer.set_progress(static_cast<int>(parse_int64(previous->meta.require("epoch"))),
                         static_cast<long>(parse_int64(previous->meta.require("step"))));
    if (auto b = previous->meta.get("best_val_top1")) best = parse_double(*b);
    if (trainer.epochs_done() >= options.epochs) {
      std::printf("run already finished %d epochs\n", trainer.epochs_done());
      return kOk;
    }
  }
  write_snapshot(out, "train", cfg.values());

  std::ofstream log(out / "train_log.csv", resume ? std::ios::app : std::ios::trunc);
  if (!log) throw std::runtime_error("cannot write " + (out / "train_log.csv").string());
  if (!resume) log << "epoch,step,l_next,l_cls,l_feat,total,lr\n";
  trainer.on_step = [&log](const StepLog& s) {
    log << s.epoch << ',' << s.step << ',' << format_double(s.loss.l_next) << ',' << format_double(s.loss.l_cls) << ','
        << format_double(s.loss.l_feat) << ',' << format_double(s.loss.total) << ',' << format_double(s.lr) << '\n';
  };

  auto snapshot = [&](int epoch, long step) {
    auto ckpt = make_checkpoint(model, ds.vocab.hash(), &trainer.optimizer());
    for (const auto& k : cfg.values().keys()) ckpt.meta.set("run." + k, *cfg.values().get(k));
    ckpt.meta.set("epoch", std::to_string(epoch));
    ckpt.meta.set("step", std::to_string(step));
    ckpt.meta.set("best_val_top1", format_double(best));
    return ckpt;
  };

  std::printf("training %s, %zu train / %zu val samples, %d epochs\n", to_string(options.mode).c_str(), train.size(),
              val.size(), options.epochs);
  const int stop_after = static_cast<int>(cfg.integer("stop_after"));
  int ran = 0;
  while (trainer.epochs_done() < options.epochs) {
    if (stop_after > 0 && ran == stop_after) {
      std::printf("stopping after %d epochs; continue with --resume\n", ran);
      return kOk;
    }
    ++ran;
    EpochLog e;
    try {
      e = trainer.train_epoch(train);
    } catch (const NumericalError&) {
      log.flush();
      std::fprintf(stderr, "non-finite loss in epoch %d; last good checkpoint kept at %s\n", trainer.epochs_done() + 1,
                   (out / "last.ckpt").string().c_str());
      throw;
    }
    log.flush();
    const auto& eval_set = val.empty() ? train : val;
    const double top1 = topk_accuracy(predict(model, eval_set), 1);
    const bool improved = top1 > best;
    if (improved) best = top1;
    const auto ckpt = snapshot(e.epoch, e.step);
    save_checkpoint(out / "last.ckpt", ckpt);
    if (improved) save_checkpoint(out / "best.ckpt", ckpt);
    std::printf("epoch %3d  loss %.4f (next %.4f cls %.4f feat %.4f)  lr %.3g  %s top1 %.4f%s\n", e.epoch,
                e.mean_loss.total, e.mean_loss.l_next, e.mean_loss.l_cls, e.mean_loss.l_feat, e.lr_end,
                val.empty() ? "train" : "val", top1, improved ? " *" : "");
    std::fflush(stdout);
  }

  if (!val.empty()) {
    const auto report = evaluate(predict(model, val), ds.vocab);
    write_text_file(out / "summary.txt", report.to_table());
    std::printf("final val: action %s\n           verb   %s\n           noun   %s\n", metrics_line(report.action).c_str(),
                metrics_line(report.verb).c_str(), metrics_line(report.noun).c_str());
  }
  return kOk;
}

int cmd_eval(const RunConfig& cfg, bool force) {
  auto loaded = load_model(cfg.str("checkpoint"));
  const auto ds = load_dataset(cfg);
  require_vocab(loaded.ckpt, ds);
  const auto clip = clip_for(loaded.ckpt, cfg);
  const auto samples = ds.samples(clip, parse_split(cfg.str("split")));
  if (samples.empty()) throw ConfigError("split '" + cfg.str("split") + "' has no samples");
  const auto out = resolve_output(cfg.str("out"), "eval");
  prepare_output(out, force);
  const auto records = predict(loaded.model, samples);
  save_predictions(out / "predictions.csv", records);
  const auto report = evaluate(records, ds.vocab);
  write_text_file(out / "report.csv", report.to_csv());
  write_text_file(out / "report.txt", report.to_table());
  write_snapshot(out, "eval", cfg.values());
  std::printf("action %s\nverb   %s\nnoun   %s\n", metrics_line(report.action).c_str(), metrics_line(report.verb).c_str(),
              metrics_line(report.noun).c_str());
  return kOk;
}

int cmd_fuse(const RunConfig& cfg, bool force) {
  const auto paths = split_list(cfg.str("predictions"));
  if (paths.size() < 2) throw ConfigError("predictions: at least two prediction files are required");
  std::vector<double> weights;
  for (const auto& w : split_list(cfg.str("weights"))) weights.push_back(parse_double(w));
  if (weights.empty()) weights.assign(paths.size(), 1.0);
  if (weights.size() != paths.size())
    throw ConfigError("weights: " + std::to_string(weights.size()) + " weights for " + std::to_string(paths.size()) + " files");
  std::vector<std::vector<PredictionRecord>> sets;
  for (const auto& p : paths) sets.push_back(load_predictions(p));
  const auto fused = late_fuse(sets, weights);
  const auto out = resolve_output(cfg.str("out"), "fuse");
  prepare_output(out, force);
  save_predictions(out / "predictions.csv", fused);
  write_snapshot(out, "fuse", cfg.values());
  if (!cfg.str("vocab").empty()) {
    fs::path vp = cfg.str("vocab");
    if (fs::is_directory(vp)) vp /= "vocab.csv";
    const auto report = evaluate(fused, Vocabulary::load(vp));
    write_text_file(out / "report.csv", report.to_csv());
    write_text_file(out / "report.txt", report.to_table());
    std::printf("action %s\n", metrics_line(report.action).c_str());
  } else {
    std::printf("fused %zu records; top1 %.4f\n", fused.size(), topk_accuracy(fused, 1));
  }
  return kOk;
}

int cmd_rollout(const RunConfig& cfg, bool force) {
  auto loaded = load_model(cfg.str("checkpoint"));
  const auto ds = load_dataset(cfg);
  require_vocab(loaded.ckpt, ds);
  const auto samples = ds.samples(clip_for(loaded.ckpt, cfg), Split::All);
  const auto& sample = find_sample(samples, cfg.uinteger("sample_id"));
  const auto trace = rollout(loaded.model, clip_tensor(sample), cfg.uinteger("steps"));
  std::printf("sample %llu, true next action %s\n", static_cast<unsigned long long>(sample.id),
              ds.vocab.entry(sample.labels.next_action).name.c_str());
  std::fputs(trace.to_text(&ds.vocab).c_str(), stdout);
  if (!cfg.str("out").empty()) {
    const auto out = resolve_output(cfg.str("out"), "rollout");
    prepare_output(out, force);
    write_text_file(out / "rollout.csv", trace.to_csv());
    write_snapshot(out, "rollout", cfg.values());
  }
  return kOk;
}

int cmd_attn(const RunConfig& cfg, bool force) {
  auto loaded = load_model(cfg.str("checkpoint"));
  const auto ds = load_dataset(cfg);
  require_vocab(loaded.ckpt, ds);
  const auto samples = ds.samples(clip_for(loaded.ckpt, cfg), Split::All);
  const auto& sample = find_sample(samples, cfg.uinteger("sample_id"));
  const auto& spatial = cfg.str("spatial");
  if (spatial != "auto" && spatial != "true" && spatial != "false")
    throw ConfigError("spatial must be auto, true or false, got '" + spatial + "'");
  const bool want_spatial = spatial == "true" || (spatial == "auto" && loaded.model.has_backbone());
  const auto clip = clip_tensor(sample);
  std::vector<Matrix> maps;
  if (want_spatial) maps = spatial_attention(loaded.model, clip);

  const auto out = resolve_output(cfg.str("out"), "attn");
  prepare_output(out, force);
  const auto temporal = head_temporal_attention(loaded.model, clip);
  const auto last = final_query_row(temporal);
  write_matrix_csv(out / "temporal.csv", temporal);
  write_matrix_csv(out / "temporal_last.csv", Matrix{1, last.size(), last});
  write_pgm(out / "temporal.pgm", temporal);
  for (std::size_t t = 0; t < maps.size(); ++t) {
    char name[32];
    std::snprintf(name, sizeof name, "spatial_%02zu", t);
    write_matrix_csv(out / (std::string(name) + ".csv"), maps[t]);
    write_pgm(out / (std::string(name) + ".pgm"), maps[t]);
  }
  write_snapshot(out, "attn", cfg.values());
  std::printf("temporal attention of the last query over %zu frames:", last.size());
  for (double v : last) std::printf(" %.4f", v);
  std::printf("\n");
  if (!maps.empty()) std::printf("wrote %zu spatial heatmaps (%zux%zu)\n", maps.size(), maps[0].rows, maps[0].cols);
  return kOk;
}

}  // namespace avt::cli
