#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <json.hpp>

#include "camera/ablation.hpp"
#include "camera/alerts.hpp"
#include "camera/gradcheck.hpp"
#include "camera/metrics.hpp"
#include "camera/train.hpp"

using json = nlohmann::ordered_json;
using namespace camera;

namespace {

uint64_t fnv1a64File(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot checksum missing file: " + path);
  uint64_t h = 0xcbf29ce484222325ull;
  char buf[1 << 16];
  while (is) {
    is.read(buf, sizeof buf);
    for (std::streamsize i = 0; i < is.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ull;
    }
  }
  return h;
}

std::string hex64(uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Every subcommand records its resolved configuration, seed, and output
// checksums next to its primary output.
void writeManifest(const CLI::App& sub, uint64_t seed,
                   const std::string& primaryOut,
                   const std::vector<std::string>& artifacts) {
  json m;
  m["subcommand"] = sub.get_name();
  m["seed"] = seed;
  json cfg = json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_lnames().empty() ? opt->get_name()
                                                       : opt->get_lnames()[0];
    if (name == "help" || name == "config") continue;
    if (!opt->results().empty()) {
      cfg[name] = opt->results().size() == 1 ? json(opt->results()[0])
                                             : json(opt->results());
    } else {
      cfg[name] = opt->get_default_str();
    }
  }
  m["config"] = cfg;
  json sums = json::object();
  for (const std::string& a : artifacts) sums[a] = hex64(fnv1a64File(a));
  m["artifacts"] = sums;
  std::ofstream os(primaryOut + ".manifest.json");
  os << m.dump(2) << '\n';
}

uint64_t defaultSeed() {
  if (const char* env = std::getenv("CAMERA_SEED"))
    return std::strtoull(env, nullptr, 10);
  return 42;
}

Regime parseRegime(const std::string& s) {
  if (s == "mixed") return Regime::Mixed;
  if (s == "benign") return Regime::Benign;
  if (s == "hazard") return Regime::Hazard;
  throw ConfigError("unknown regime: " + s);
}

ModelConfig modelForData(const std::vector<ScenarioSequence>& data,
                         const std::string& preset = "reference") {
  if (data.empty()) throw ConfigError("empty scenario set");
  ModelConfig mc;
  if (preset == "reference") mc = ModelConfig::reference();
  else if (preset == "small") mc = ModelConfig::mini();
  else throw ConfigError("unknown preset: " + preset);
  mc.gridH = data.front().H;
  mc.gridW = data.front().W;
  mc.h = mc.gridH / 4;
  mc.w = mc.gridW / 4;
  return mc;
}

json reportToJson(const EvalReport& rep) {
  json j;
  j["ap"] = rep.ap;
  j["auc"] = rep.auc;
  j["mtta_s"] = rep.mTTA;
  j["tta_at_r50_s"] = rep.ttaAtR50;
  j["false_alarm_rate"] = rep.falseAlarmRate;
  auto op = [](const OperatingPoint& o) {
    return json{{"precision", o.precision}, {"recall", o.recall},
                {"f1", o.f1},               {"mean_tta_s", o.meanTTA},
                {"tp", o.tp},               {"fp", o.fp},
                {"fn", o.fn},               {"tn", o.tn}};
  };
  j["adaptive"] = op(rep.adaptive);
  j["static_0.5"] = op(rep.fixed);
  json sweep = json::array();
  for (const SweepPoint& sp : rep.sweep)
    sweep.push_back({{"theta", sp.theta},
                     {"precision", sp.precision},
                     {"recall", sp.recall},
                     {"mean_tta_s", sp.meanTTA},
                     {"tp", sp.tp},
                     {"fp", sp.fp},
                     {"fn", sp.fn},
                     {"tn", sp.tn}});
  j["sweep"] = sweep;
  return j;
}

void writeSweepCsv(const std::string& path, const EvalReport& rep) {
  std::ofstream os(path);
  os << "theta,precision,recall,mean_tta_s,tp,fp,fn,tn\n";
  char line[256];
  for (const SweepPoint& sp : rep.sweep) {
    std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g,%d,%d,%d,%d\n",
                  sp.theta, sp.precision, sp.recall, sp.meanTTA, sp.tp, sp.fp,
                  sp.fn, sp.tn);
    os << line;
  }
}

void writeTraceCsv(const std::string& path, const RiskTrace& tr) {
  std::ofstream os(path);
  os << "frame,p,tau,alert,argmax_x,argmax_y\n";
  char line[256];
  for (size_t t = 0; t < tr.p.size(); ++t) {
    const Tensor& m = tr.ms[t];
    size_t arg = 0;
    for (size_t i = 1; i < m.size(); ++i)
      if (m[i] > m[arg]) arg = i;
    const int w = m.dim(1);
    std::snprintf(line, sizeof line, "%zu,%.17g,%.17g,%d,%d,%d\n", t, tr.p[t],
                  tr.tau[t], tr.p[t] > tr.tau[t] ? 1 : 0,
                  static_cast<int>(arg) % w, static_cast<int>(arg) / w);
    os << line;
  }
}

int runMain(int argc, char** argv) {
  CLI::App app{"CAMERA accident-anticipation pipeline"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value config file ('#' comments)");

  uint64_t seed = defaultSeed();
  int threads = 1;

  // ---- gen ----
  auto* gen = app.add_subcommand("gen", "generate a scenario file");
  int genCount = 0, genFrames = 64, genFps = 10, genGrid = 32, genTokens = 32;
  double genPositive = 0.5, genRadius = 1.0, genDistracted = 0.5;
  std::string genOut, genRegime = "mixed";
  bool genStress = false;
  gen->add_option("--seed", seed, "rng seed");
  gen->add_option("--count", genCount, "number of sequences")->required();
  gen->add_option("--positive", genPositive, "positive fraction");
  gen->add_option("--out", genOut, "output .cams path")->required();
  gen->add_option("--regime", genRegime, "mixed|benign|hazard");
  gen->add_option("--frames", genFrames, "frames per sequence");
  gen->add_option("--fps", genFps, "frame rate");
  gen->add_option("--grid", genGrid, "grid resolution");
  gen->add_option("--token-len", genTokens, "token sequence length");
  gen->add_option("--collision-radius", genRadius, "collision distance (m)");
  gen->add_option("--distracted", genDistracted, "distracted-driver fraction");
  gen->add_flag("--stress", genStress, "two-regime stress set (benign/hazard)");
  gen->add_option("--threads", threads, "worker threads (1 = deterministic)");

  // ---- train ----
  auto* train = app.add_subcommand("train", "train a model");
  std::string trData, trVal, trOut, trLog;
  TrainConfig trCfg;
  bool trKnockMfe = false, trKnockAhf = false, trKnockBigru = false;
  bool trVerbose = false;
  std::string trPreset = "reference";
  train->add_option("--seed", seed, "rng seed");
  train->add_option("--preset", trPreset, "model width preset: reference|small");
  train->add_option("--data", trData, "training .cams")->required();
  train->add_option("--val", trVal, "validation .cams (default: 20% split)");
  train->add_option("--out", trOut, "checkpoint .camr path")->required();
  train->add_option("--log", trLog, "JSON-lines epoch log path");
  train->add_option("--epochs", trCfg.epochs, "max epochs");
  train->add_option("--batch", trCfg.batch, "gradient accumulation batch");
  train->add_option("--lr", trCfg.optim.lr, "peak learning rate");
  train->add_option("--patience", trCfg.patience, "early-stop patience");
  train->add_option("--warmup", trCfg.optim.warmupEpochs, "warmup epochs");
  train->add_option("--weight-decay", trCfg.optim.weightDecay, "AdamW decay");
  train->add_option("--clip", trCfg.optim.clipNorm, "global grad-norm clip");
  train->add_option("--window", trCfg.window_s, "anticipation window (s)");
  train->add_option("--time-budget", trCfg.maxSeconds, "wallclock cap (s)");
  train->add_flag("--knock-mfe", trKnockMfe, "remove the attention refiner");
  train->add_flag("--knock-ahf", trKnockAhf, "remove hierarchical fusion");
  train->add_flag("--knock-bigru", trKnockBigru, "remove the Bi-GRU");
  train->add_flag("--verbose", trVerbose, "per-epoch console output");
  train->add_option("--threads", threads, "worker threads (1 = deterministic)");

  // ---- eval ----
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  std::string evCkpt, evData, evOut, evSweep, evTraces;
  double evWindow = 3.0;
  bool evCausal = false;
  eval->add_option("--ckpt", evCkpt, "checkpoint .camr")->required();
  eval->add_option("--data", evData, "evaluation .cams")->required();
  eval->add_option("--out", evOut, "EvalReport JSON path")->required();
  eval->add_option("--sweep", evSweep, "sweep CSV path");
  eval->add_option("--traces", evTraces, "RiskTrace CSV path prefix");
  eval->add_option("--window", evWindow, "anticipation window (s)");
  eval->add_flag("--causal", evCausal, "forward-only temporal mode");
  eval->add_option("--threads", threads, "worker threads (1 = deterministic)");

  // ---- ablate ----
  auto* ablate = app.add_subcommand("ablate", "run the ablation grid");
  std::string abOut;
  AblationConfig abCfg;
  ablate->add_option("--seed", seed, "rng seed");
  ablate->add_option("--out", abOut, "report JSON path")->required();
  ablate->add_option("--train-count", abCfg.trainCount, "training sequences");
  ablate->add_option("--val-count", abCfg.valCount, "validation sequences");
  ablate->add_option("--test-count", abCfg.testCount, "test sequences");
  ablate->add_option("--positive", abCfg.positiveFraction, "positive fraction");
  ablate->add_option("--epochs", abCfg.train.epochs, "epochs per variant");
  ablate->add_option("--batch", abCfg.train.batch, "batch size");
  ablate->add_option("--lr", abCfg.train.optim.lr, "peak learning rate");
  ablate->add_option("--patience", abCfg.train.patience, "early-stop patience");
  ablate->add_option("--frames", abCfg.scenario.T, "frames per sequence");
  ablate->add_flag("--verbose", abCfg.verbose, "progress output");
  ablate->add_option("--threads", threads, "worker threads (1 = deterministic)");

  // ---- alert ----
  auto* alert = app.add_subcommand("alert", "emit the alert stream");
  std::string alCkpt, alData, alOut, alMode = "ego";
  int alIndex = 0;
  double alHeading = 0.0;
  bool alDescribeAll = false;
  alert->add_option("--ckpt", alCkpt, "checkpoint .camr")->required();
  alert->add_option("--data", alData, "scenario .cams")->required();
  alert->add_option("--index", alIndex, "sequence index");
  alert->add_option("--out", alOut, "JSON-lines output path")->required();
  alert->add_option("--mode", alMode, "ego|compass");
  alert->add_option("--heading", alHeading, "ego heading (deg, compass mode)");
  alert->add_flag("--describe-all", alDescribeAll,
                  "describe every frame, not only triggered ones");
  alert->add_option("--threads", threads, "worker threads (1 = deterministic)");

  // ---- gradcheck ----
  auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient check");
  GradCheckOptions gcOpt;
  gc->add_option("--seed", gcOpt.seed, "rng seed");
  gc->add_option("--coords", gcOpt.coordsPerTensor, "coordinates per tensor");
  gc->add_option("--step", gcOpt.step, "central-difference step");
  gc->add_option("--tol", gcOpt.tol, "relative-error tolerance");

  CLI11_PARSE(app, argc, argv);
  if (threads < 1) throw ConfigError("--threads must be >= 1");

  if (gen->parsed()) {
    ScenarioConfig sc;
    sc.T = genFrames;
    sc.fps = genFps;
    sc.H = sc.W = genGrid;
    sc.tokenLen = genTokens;
    sc.collisionRadius = genRadius;
    sc.distractedFraction = genDistracted;
    sc.regime = parseRegime(genRegime);
    const auto seqs = genStress ? generateStressSet(seed, genCount, sc)
                                : generate(seed, genCount, genPositive, sc);
    saveScenarios(genOut, seqs);
    writeManifest(*gen, seed, genOut, {genOut});
    std::printf("wrote %zu sequences to %s\n", seqs.size(), genOut.c_str());
    return 0;
  }

  if (train->parsed()) {
    auto data = loadScenarios(trData);
    std::vector<ScenarioSequence> trainSet, valSet;
    if (!trVal.empty()) {
      trainSet = std::move(data);
      valSet = loadScenarios(trVal);
    } else {
      // class-balanced 80/20 split
      std::vector<ScenarioSequence> pos, neg;
      for (auto& s : data) (s.label ? pos : neg).push_back(std::move(s));
      auto split = [&](std::vector<ScenarioSequence>& v) {
        const size_t keep = v.size() - v.size() / 5;
        for (size_t i = 0; i < v.size(); ++i)
          (i < keep ? trainSet : valSet).push_back(std::move(v[i]));
      };
      split(pos);
      split(neg);
    }
    ModelConfig mc = modelForData(trainSet, trPreset);
    mc.knockRefiner = trKnockMfe;
    mc.knockFusion = trKnockAhf;
    mc.knockBiGRU = trKnockBigru;
    Model model(mc);
    model.init(seed);
    trCfg.seed = seed;
    trCfg.verbose = trVerbose;
    if (trLog.empty()) trLog = trOut + ".log.jsonl";
    trCfg.logPath = trLog;
    const TrainResult res = trainModel(model, trainSet, valSet, trCfg);
    model.save(trOut);
    writeManifest(*train, seed, trOut, {trOut, trLog});
    std::printf("best epoch %d  val_ap %.4f%s%s\n", res.bestEpoch,
                res.bestValAP, res.earlyStopped ? "  (early stop)" : "",
                res.abortedNaN ? "  (aborted: non-finite loss)" : "");
    return res.abortedNaN ? 2 : 0;
  }

  if (eval->parsed()) {
    Model model = Model::load(evCkpt);
    if (evCausal) {
      ModelConfig mc = model.config();
      mc.causal = true;
      Model causal(mc);
      causal.params().allMutable() = model.params().all();
      model = std::move(causal);
    }
    const auto data = loadScenarios(evData);
    const EvalReport rep = evaluateModel(model, data, evWindow);
    std::vector<std::string> artifacts{evOut};
    {
      std::ofstream os(evOut);
      os << reportToJson(rep).dump(2) << '\n';
    }
    if (!evSweep.empty()) {
      writeSweepCsv(evSweep, rep);
      artifacts.push_back(evSweep);
    }
    if (!evTraces.empty()) {
      for (size_t i = 0; i < data.size(); ++i) {
        const RiskTrace tr = model.run(data[i], true);
        const std::string path = evTraces + std::to_string(i) + ".csv";
        writeTraceCsv(path, tr);
        artifacts.push_back(path);
      }
    }
    writeManifest(*eval, seed, evOut, artifacts);
    std::printf("ap %.4f  auc %.4f  mtta %.3fs  fa-rate %.3f\n", rep.ap,
                rep.auc, rep.mTTA, rep.falseAlarmRate);
    return 0;
  }

  if (ablate->parsed()) {
    abCfg.seed = seed;
    const AblationReport rep = runAblation(abCfg);
    json rows = json::array();
    for (const AblationRow& r : rep.rows)
      rows.push_back({{"name", r.name},
                      {"ap", r.ap},
                      {"auc", r.auc},
                      {"mtta_s", r.mTTA}});
    std::ofstream os(abOut);
    os << json{{"rows", rows}}.dump(2) << '\n';
    os.close();
    writeManifest(*ablate, seed, abOut, {abOut});
    return 0;
  }

  if (alert->parsed()) {
    Model model = Model::load(alCkpt);
    const auto data = loadScenarios(alData);
    if (alIndex < 0 || static_cast<size_t>(alIndex) >= data.size())
      throw ConfigError("--index out of range");
    if (alMode != "ego" && alMode != "compass")
      throw ConfigError("--mode must be ego or compass");
    const AlertMode mode =
        alMode == "ego" ? AlertMode::EgoRelative : AlertMode::Compass;
    const ScenarioSequence& seq = data[static_cast<size_t>(alIndex)];
    const RiskTrace tr = model.run(seq, true);
    std::ofstream os(alOut);
    for (int t = 0; t < seq.T; ++t) {
      const size_t ti = static_cast<size_t>(t);
      const int id = linkRiskPeak(tr.ms[ti], seq, t);
      const Agent& a = seq.agents[static_cast<size_t>(id)];
      if (a.x[ti] == 0.0 && a.z[ti] == 0.0) continue;  // degenerate overlap
      const SpatialReference sp = locate(a.x[ti], a.z[ti]);
      const auto text = renderAlert(a.cls, sp, tr.p[ti], tr.tau[ti], mode,
                                    alHeading, alDescribeAll);
      if (!text) continue;
      json line{{"frame", t},
                {"agent_id", id},
                {"class", agentClassName(a.cls)},
                {"distance_m", sp.distance_m},
                {"bearing_deg", sp.bearing_deg},
                {"sector", sectorName(sp.sector)},
                {"p", tr.p[ti]},
                {"tau", tr.tau[ti]},
                {"text", *text}};
      os << line.dump() << '\n';
    }
    os.close();
    writeManifest(*alert, seed, alOut, {alOut});
    return 0;
  }

  // gradcheck
  const GradCheckResult res = checkModelGradients(gcOpt);
  std::printf("gradcheck: %s  checked %d coords  max rel err %.3e (%s)\n",
              res.pass() ? "PASS" : "FAIL", res.checked, res.maxRelErr,
              res.worstCoord.c_str());
  for (const std::string& f : res.failures)
    std::printf("  fail: %s\n", f.c_str());
  return res.pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return runMain(argc, argv);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "runtime error: %s\n", e.what());
    return 2;
  }
}
