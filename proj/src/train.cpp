#include "camera/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "camera/rng.hpp"

namespace camera {

namespace {

double seconds(std::chrono::steady_clock::time_point from) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - from)
      .count();
}

}  // namespace

TrainResult trainModel(Model& model, const std::vector<ScenarioSequence>& train,
                       const std::vector<ScenarioSequence>& val,
                       const TrainConfig& cfg) {
  if (train.empty()) throw ConfigError("training set is empty");
  if (cfg.batch < 1 || cfg.epochs < 1 || cfg.patience < 1)
    throw ConfigError("train config out of range");

  AdamW opt(model.params(), cfg.optim);
  std::ofstream log;
  if (!cfg.logPath.empty()) {
    log.open(cfg.logPath);
    if (!log) throw std::runtime_error("cannot open log: " + cfg.logPath);
  }

  TrainResult res;
  std::map<std::string, Tensor> best = model.params().all();
  const auto t0 = std::chrono::steady_clock::now();

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto te = std::chrono::steady_clock::now();
    const double lr = scheduledLr(cfg.optim, epoch, cfg.epochs);

    std::vector<size_t> order(train.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuf = Rng::substream(cfg.seed, 0x5a5a0000u + static_cast<uint64_t>(epoch));
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[static_cast<size_t>(shuf.below(i))]);

    EpochStats st;
    st.epoch = epoch;
    st.lr = lr;
    int seen = 0;
    bool nan = false;
    for (size_t b = 0; b < order.size() && !nan; b += static_cast<size_t>(cfg.batch)) {
      model.params().zeroGrads();
      const size_t bEnd = std::min(order.size(), b + static_cast<size_t>(cfg.batch));
      for (size_t k = b; k < bEnd; ++k) {
        const ScenarioSequence& seq = train[order[k]];
        Tape tape;
        SequenceForward fw = model.forward(tape, seq);
        LossTerms lt = sequenceLoss(tape, fw, seq, model.config().h,
                                    model.config().w, cfg.lossWeights,
                                    cfg.focal, cfg.window_s);
        const double lv = tape.val(lt.total)[0];
        if (!std::isfinite(lv)) {
          nan = true;
          break;
        }
        st.loss += lv;
        st.focal += tape.val(lt.focal)[0];
        st.kl += tape.val(lt.kl)[0];
        st.smooth += tape.val(lt.smooth)[0];
        ++seen;
        tape.backward(lt.total);
        model.params().flushGrads(tape);
      }
      if (nan) break;
      opt.step(lr, 1.0 / static_cast<double>(bEnd - b));
      for (const char* n : {"risk.lambda1", "risk.lambda2"}) {
        double& v = model.params().param(n)[0];
        v = std::clamp(v, 0.0, cfg.lambdaMax);
      }
    }
    if (nan) {
      // roll back to the last finite-validated parameters
      model.params().allMutable() = best;
      res.abortedNaN = true;
      break;
    }
    st.loss /= seen;
    st.focal /= seen;
    st.kl /= seen;
    st.smooth /= seen;

    const EvalReport rep =
        val.empty() ? EvalReport{} : evaluateModel(model, val, cfg.window_s);
    st.valAP = rep.ap;
    st.valAUC = rep.auc;
    st.seconds = seconds(te);
    res.history.push_back(st);

    if (log) {
      char line[512];
      std::snprintf(line, sizeof line,
                    "{\"epoch\":%d,\"lr\":%.8g,\"loss\":%.8g,\"focal\":%.8g,"
                    "\"kl\":%.8g,\"smooth\":%.8g,\"val_ap\":%.8g,"
                    "\"val_auc\":%.8g,\"seconds\":%.3f}",
                    st.epoch, st.lr, st.loss, st.focal, st.kl, st.smooth,
                    st.valAP, st.valAUC, st.seconds);
      log << line << '\n';
      log.flush();
    }
    if (cfg.verbose) {
      std::printf(
          "epoch %3d  lr %.2e  loss %.4f  val_ap %.4f  val_auc %.4f  %.1fs\n",
          st.epoch, st.lr, st.loss, st.valAP, st.valAUC, st.seconds);
      std::fflush(stdout);
    }

    if (st.valAP > res.bestValAP || res.bestEpoch < 0) {
      res.bestValAP = st.valAP;
      res.bestEpoch = epoch;
      best = model.params().all();
    } else if (epoch - res.bestEpoch >= cfg.patience) {
      res.earlyStopped = true;
      break;
    }
    if (cfg.maxSeconds > 0 && seconds(t0) > cfg.maxSeconds) {
      res.hitTimeBudget = true;
      break;
    }
  }

  model.params().allMutable() = best;
  return res;
}

}  // namespace camera
