#include "ggsa/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "ggsa/error.hpp"
#include "ggsa/random.hpp"

namespace ggsa {
namespace {

struct Example {
  std::vector<std::int32_t> question, positive, negative;
};

double example_loss(const GradcheckOptions& opt, const ModelConfig& cfg, EncoderParams<double>& params,
                    const Example& ex, bool backward) {
  Tape<double> tape;
  EncodedSequence<double> q = encode_question(tape, ex.question, cfg, params, false, nullptr);
  Var<double> vq = max_pool_columns(q.h, q.valid);
  auto answer = [&](const std::vector<std::int32_t>& tokens) {
    EncodedSequence<double> a = encode_answer(tape, tokens, cfg, params, false, nullptr, &q);
    return compose(a, cfg.composition, params.composition,
                   cfg.composition == Composition::kAttention ? &vq : static_cast<const Var<double>*>(nullptr));
  };
  Var<double> loss;
  if (opt.loss == LossKind::kPairwise) {
    loss = pairwise_hinge_loss(vq, answer(ex.positive), answer(ex.negative));
  } else {
    Var<double> l1 = pointwise_loss(vq, answer(ex.positive), true, params.scorer).loss;
    Var<double> l0 = pointwise_loss(vq, answer(ex.negative), false, params.scorer).loss;
    loss = add(l1, l0);
  }
  if (backward) tape.backward(loss);
  return loss.value()[0];
}

}  // namespace

GradcheckOptions GradcheckOptions::toy() {
  GradcheckOptions opt;
  opt.model.embed_dim = 8;
  opt.model.heads = 2;
  opt.model.group_size = 2;
  opt.model.offsets = {0, 1};
  opt.model.vocab_size = 12;
  opt.model.max_question_len = 4;
  opt.model.max_answer_len = 4;
  opt.model.keep_prob = 1.0;
  opt.model.variant = Variant::kIggsa;
  opt.model.composition = Composition::kMaxPool;
  return opt;
}

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

GradcheckReport gradcheck(const GradcheckOptions& opt) {
  ModelConfig cfg = opt.model;
  cfg.precision = Precision::kDouble;
  cfg.max_question_len = std::max(cfg.max_question_len, opt.question_len);
  cfg.max_answer_len = std::max(cfg.max_answer_len, opt.answer_len);
  cfg.validate();
  EncoderParams<double> params = EncoderParams<double>::init(cfg);

  Rng rng(opt.seed);
  auto tokens = [&](std::size_t n) {
    std::vector<std::int32_t> out(n);
    for (auto& t : out) t = static_cast<std::int32_t>(uniform_index(rng, cfg.vocab_size));
    return out;
  };
  Example ex;
  double loss = 0.0;
  for (int attempt = 0;; ++attempt) {
    if (attempt == 100) throw ContractError("gradcheck: could not draw an example with a positive loss");
    ex = {tokens(opt.question_len), tokens(opt.answer_len), tokens(opt.answer_len)};
    loss = example_loss(opt, cfg, params, ex, false);
    if (loss > 0.0) break;
  }

  params.zero_grad();
  example_loss(opt, cfg, params, ex, true);
  GradcheckReport report;
  report.loss = loss;
  for (Parameter<double>* p : params.all()) {
    ParamGradError err;
    err.name = p->name;
    err.elements = p->value.size();
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double saved = p->value[i];
      p->value[i] = saved + opt.step;
      const double up = example_loss(opt, cfg, params, ex, false);
      p->value[i] = saved - opt.step;
      const double down = example_loss(opt, cfg, params, ex, false);
      p->value[i] = saved;
      const double numeric = (up - down) / (2.0 * opt.step);
      const double rel = relative_error(p->grad[i], numeric, opt.floor);
      if (rel > err.max_rel_error || i == 0) {
        err.max_rel_error = rel;
        err.worst_index = i;
        err.analytic = p->grad[i];
        err.numeric = numeric;
      }
    }
    report.elements += err.elements;
    if (err.max_rel_error >= report.max_rel_error) {
      report.max_rel_error = err.max_rel_error;
      report.worst_param = err.name;
    }
    report.params.push_back(std::move(err));
  }
  return report;
}

}  // namespace ggsa
