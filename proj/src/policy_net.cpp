#include "fedsched/policy_net.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace fedsched {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Eigen::VectorXd sigmoid(const Eigen::VectorXd& x) {
  return x.unaryExpr([](double v) { return sigmoid(v); });
}

}  // namespace

PolicyParams PolicyParams::zeros(int hidden, int features) {
  PolicyParams p;
  p.hidden = hidden;
  p.features = features;
  p.wz = Eigen::MatrixXd::Zero(hidden, features);
  p.wr = p.wz;
  p.wc = p.wz;
  p.uz = Eigen::MatrixXd::Zero(hidden, hidden);
  p.ur = p.uz;
  p.uc = p.uz;
  p.bz = Eigen::VectorXd::Zero(hidden);
  p.br = p.bz;
  p.bc = p.bz;
  p.wo = Eigen::VectorXd::Zero(hidden);
  p.bo = 0.0;
  return p;
}

PolicyParams PolicyParams::init(int hidden, int features, Rng& rng) {
  PolicyParams p = zeros(hidden, features);
  auto fill = [&rng](auto& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      m.data()[i] = rng.uniform(-0.1, 0.1);
    }
  };
  fill(p.wz); fill(p.wr); fill(p.wc);
  fill(p.uz); fill(p.ur); fill(p.uc);
  fill(p.bz); fill(p.br); fill(p.bc);
  fill(p.wo);
  p.bo = rng.uniform(-0.1, 0.1);
  return p;
}

int PolicyParams::count() const {
  return int(3 * wz.size() + 3 * uz.size() + 3 * bz.size() + wo.size() + 1);
}

Eigen::VectorXd PolicyParams::flatten() const {
  Eigen::VectorXd flat(count());
  Eigen::Index at = 0;
  auto put = [&](const auto& m) {
    flat.segment(at, m.size()) = Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
    at += m.size();
  };
  put(wz); put(wr); put(wc);
  put(uz); put(ur); put(uc);
  put(bz); put(br); put(bc);
  put(wo);
  flat(at++) = bo;
  return flat;
}

PolicyParams PolicyParams::unflatten(int hidden, int features,
                                     const Eigen::VectorXd& flat) {
  PolicyParams p = zeros(hidden, features);
  if (flat.size() != p.count()) {
    throw std::invalid_argument("policy parameter count mismatch");
  }
  Eigen::Index at = 0;
  auto take = [&](auto& m) {
    Eigen::Map<Eigen::VectorXd>(m.data(), m.size()) = flat.segment(at, m.size());
    at += m.size();
  };
  take(p.wz); take(p.wr); take(p.wc);
  take(p.uz); take(p.ur); take(p.uc);
  take(p.bz); take(p.br); take(p.bc);
  take(p.wo);
  p.bo = flat(at++);
  return p;
}

void PolicyParams::add_scaled(const PolicyParams& g, double scale) {
  wz += scale * g.wz; wr += scale * g.wr; wc += scale * g.wc;
  uz += scale * g.uz; ur += scale * g.ur; uc += scale * g.uc;
  bz += scale * g.bz; br += scale * g.br; bc += scale * g.bc;
  wo += scale * g.wo;
  bo += scale * g.bo;
}

double PolicyParams::squared_norm() const {
  return wz.squaredNorm() + wr.squaredNorm() + wc.squaredNorm() +
         uz.squaredNorm() + ur.squaredNorm() + uc.squaredNorm() +
         bz.squaredNorm() + br.squaredNorm() + bc.squaredNorm() +
         wo.squaredNorm() + bo * bo;
}

bool PolicyParams::all_finite() const {
  return flatten().allFinite();
}

Eigen::VectorXd policy_forward(const PolicyParams& params,
                               const Eigen::MatrixXd& features,
                               PolicyTrace& trace) {
  if (features.cols() != params.features) {
    throw std::invalid_argument("feature width does not match the policy");
  }
  const Eigen::Index steps = features.rows();
  const int hid = params.hidden;
  trace.z.resize(hid, steps);
  trace.r.resize(hid, steps);
  trace.c.resize(hid, steps);
  trace.h.resize(hid, steps);
  trace.probs.resize(steps);

  Eigen::VectorXd h_prev = Eigen::VectorXd::Zero(hid);
  for (Eigen::Index t = 0; t < steps; ++t) {
    const Eigen::VectorXd x = features.row(t);
    const Eigen::VectorXd z = sigmoid(params.wz * x + params.uz * h_prev + params.bz);
    const Eigen::VectorXd r = sigmoid(params.wr * x + params.ur * h_prev + params.br);
    const Eigen::VectorXd c =
        (params.wc * x + params.uc * (r.cwiseProduct(h_prev)) + params.bc)
            .array().tanh();
    const Eigen::VectorXd h =
        (Eigen::VectorXd::Ones(hid) - z).cwiseProduct(h_prev) + z.cwiseProduct(c);
    trace.z.col(t) = z;
    trace.r.col(t) = r;
    trace.c.col(t) = c;
    trace.h.col(t) = h;
    trace.probs(t) = sigmoid(params.wo.dot(h) + params.bo);
    h_prev = h;
  }
  return trace.probs;
}

Eigen::VectorXd policy_forward(const PolicyParams& params,
                               const Eigen::MatrixXd& features) {
  PolicyTrace trace;
  return policy_forward(params, features, trace);
}

double log_prob_sum(const PolicyParams& params,
                    const Eigen::MatrixXd& features,
                    const std::vector<int>& selected) {
  const Eigen::VectorXd probs = policy_forward(params, features);
  std::vector<char> picked(size_t(features.rows()), 0);
  for (int k : selected) picked.at(size_t(k)) = 1;
  double sum = 0.0;
  for (Eigen::Index k = 0; k < probs.size(); ++k) {
    sum += picked[size_t(k)] ? std::log(probs(k)) : std::log1p(-probs(k));
  }
  return sum;
}

PolicyParams grad_log_prob(const PolicyParams& params,
                           const Eigen::MatrixXd& features,
                           const std::vector<int>& selected) {
  PolicyTrace trace;
  policy_forward(params, features, trace);
  const Eigen::Index steps = features.rows();
  const int hid = params.hidden;

  std::vector<char> picked(size_t(steps), 0);
  for (int k : selected) picked.at(size_t(k)) = 1;

  PolicyParams grad = PolicyParams::zeros(params.hidden, params.features);
  Eigen::VectorXd gh_next = Eigen::VectorXd::Zero(hid);

  for (Eigen::Index t = steps - 1; t >= 0; --t) {
    const Eigen::VectorXd x = features.row(t);
    const Eigen::VectorXd h_prev =
        t == 0 ? Eigen::VectorXd::Zero(hid) : Eigen::VectorXd(trace.h.col(t - 1));
    const Eigen::VectorXd z = trace.z.col(t);
    const Eigen::VectorXd r = trace.r.col(t);
    const Eigen::VectorXd c = trace.c.col(t);
    const Eigen::VectorXd h = trace.h.col(t);

    Eigen::VectorXd gh = gh_next;
    {
      // Selected steps contribute log p, unselected ones log(1 - p):
      // d/do is (1 - p) and -p respectively.
      const double go =
          picked[size_t(t)] ? 1.0 - trace.probs(t) : -trace.probs(t);
      grad.wo += go * h;
      grad.bo += go;
      gh += go * params.wo;
    }

    const Eigen::VectorXd gz = gh.cwiseProduct(c - h_prev);
    const Eigen::VectorXd gc = gh.cwiseProduct(z);
    Eigen::VectorXd gh_prev = gh.cwiseProduct(Eigen::VectorXd::Ones(hid) - z);

    const Eigen::VectorXd gac =
        gc.cwiseProduct(Eigen::VectorXd::Ones(hid) - c.cwiseProduct(c));
    grad.wc += gac * x.transpose();
    grad.uc += gac * (r.cwiseProduct(h_prev)).transpose();
    grad.bc += gac;
    const Eigen::VectorXd uc_gac = params.uc.transpose() * gac;
    gh_prev += uc_gac.cwiseProduct(r);
    const Eigen::VectorXd gr = uc_gac.cwiseProduct(h_prev);

    const Eigen::VectorXd gar =
        gr.cwiseProduct(r.cwiseProduct(Eigen::VectorXd::Ones(hid) - r));
    grad.wr += gar * x.transpose();
    grad.ur += gar * h_prev.transpose();
    grad.br += gar;
    gh_prev += params.ur.transpose() * gar;

    const Eigen::VectorXd gaz =
        gz.cwiseProduct(z.cwiseProduct(Eigen::VectorXd::Ones(hid) - z));
    grad.wz += gaz * x.transpose();
    grad.uz += gaz * h_prev.transpose();
    grad.bz += gaz;
    gh_prev += params.uz.transpose() * gaz;

    gh_next = gh_prev;
  }
  return grad;
}

void save_policy(std::ostream& out, const PolicyParams& params,
                 int num_devices) {
  const Eigen::VectorXd flat = params.flatten();
  out << "fedsched-policy 1\n"
      << params.hidden << ' ' << num_devices << ' ' << params.features << ' '
      << flat.size() << '\n';
  char buf[40];
  for (Eigen::Index i = 0; i < flat.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g\n", flat(i));
    out << buf;
  }
}

PolicyParams load_policy(std::istream& in, int* num_devices) {
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "fedsched-policy" || version != 1) {
    throw std::runtime_error("unrecognized policy file header");
  }
  int hidden = 0, devices = 0, features = 0;
  Eigen::Index n = 0;
  in >> hidden >> devices >> features >> n;
  if (!in || hidden <= 0 || features <= 0 || n <= 0) {
    throw std::runtime_error("malformed policy file header");
  }
  Eigen::VectorXd flat(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(in >> flat(i))) {
      throw std::runtime_error("policy file truncated");
    }
  }
  if (num_devices) *num_devices = devices;
  return PolicyParams::unflatten(hidden, features, flat);
}

}  // namespace fedsched
