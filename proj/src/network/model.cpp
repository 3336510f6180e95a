#include "network/model.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>

#include "core/error.hpp"
#include "core/tensor_io.hpp"

namespace tal::network {

using nlohmann::json;

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

constexpr double kProbEps = 1e-7;

void check_shapes(const ModelParams& p) {
  const int h = p.hidden();
  if (h % 3 != 0) throw ConfigError("hidden size must be divisible by 3");
  for (const auto& l : p.layers) {
    if (l.hidden() != h) throw ConfigError("inconsistent hidden size across layers");
  }
}

Matrix uniform_matrix(int rows, int cols, std::mt19937_64& rng) {
  const double s = 1.0 / std::sqrt(static_cast<double>(cols));
  std::uniform_real_distribution<double> dist(-s, s);
  Matrix m(rows, cols);
  for (auto& v : m.data()) v = dist(rng);
  return m;
}

}  // namespace

std::vector<TensorRef> collect_tensors(ModelParams& p) {
  std::vector<TensorRef> out;
  auto mat = [&](Matrix& m) { out.push_back({m.data().data(), m.data().size(), true}); };
  auto vec = [&](Vec& v) { out.push_back({v.data(), v.size(), false}); };
  for (auto& l : p.layers) {
    mat(l.Wz); mat(l.Wr); mat(l.Wh);
    mat(l.Uz); mat(l.Ur); mat(l.Uh);
    vec(l.bz); vec(l.br); vec(l.bh);
  }
  mat(p.head.Astart); mat(p.head.Aend); mat(p.head.Aaction);
  vec(p.head.bstart); vec(p.head.bend); vec(p.head.baction);
  return out;
}

size_t parameter_count(const ModelParams& p) {
  size_t n = 0;
  for (const auto& t : collect_tensors(const_cast<ModelParams&>(p))) n += t.size;
  return n;
}

ModelParams init_model(int input_dim, int hidden, int num_layers, int k_steps,
                       std::mt19937_64& rng) {
  if (hidden % 3 != 0) throw ConfigError("hidden size must be divisible by 3");
  if (num_layers < 1 || k_steps < 1 || input_dim < 1)
    throw ConfigError("bad model shape");
  ModelParams p;
  for (int l = 0; l < num_layers; ++l) {
    const int din = l == 0 ? input_dim : hidden;
    GruLayerParams lp;
    lp.Wz = uniform_matrix(hidden, din, rng);
    lp.Wr = uniform_matrix(hidden, din, rng);
    lp.Wh = uniform_matrix(hidden, din, rng);
    lp.Uz = uniform_matrix(hidden, hidden, rng);
    lp.Ur = uniform_matrix(hidden, hidden, rng);
    lp.Uh = uniform_matrix(hidden, hidden, rng);
    lp.bz.assign(hidden, 0.0);
    lp.br.assign(hidden, 0.0);
    lp.bh.assign(hidden, 0.0);
    p.layers.push_back(std::move(lp));
  }
  const int third = hidden / 3;
  p.head.Astart = uniform_matrix(k_steps, third, rng);
  p.head.Aend = uniform_matrix(k_steps, third, rng);
  p.head.Aaction = uniform_matrix(k_steps, third, rng);
  p.head.bstart.assign(k_steps, 0.0);
  p.head.bend.assign(k_steps, 0.0);
  p.head.baction.assign(k_steps, 0.0);
  return p;
}

ModelParams zeros_like(const ModelParams& p) {
  ModelParams z = p;
  for (auto& t : collect_tensors(z)) std::fill(t.data, t.data + t.size, 0.0);
  return z;
}

void scale_params(ModelParams& p, double s) {
  for (auto& t : collect_tensors(p))
    for (size_t i = 0; i < t.size; ++i) t.data[i] *= s;
}

AdamState init_adam(const ModelParams& p) {
  AdamState st;
  st.m = zeros_like(p);
  st.v = zeros_like(p);
  st.step = 0;
  return st;
}

GruStepCache gru_cell_forward(std::span<const double> x, std::span<const double> h_prev,
                              const GruLayerParams& p) {
  const int h = p.hidden();
  if (static_cast<int>(x.size()) != p.input_dim() || static_cast<int>(h_prev.size()) != h)
    throw ConfigError("gru_cell_forward: shape mismatch");

  GruStepCache c;
  c.x.assign(x.begin(), x.end());
  c.z.assign(h, 0.0);
  c.r.assign(h, 0.0);
  c.hcand.assign(h, 0.0);
  c.h.assign(h, 0.0);

  Vec az(h), ar(h), ah(h), rh(h);
  matvec(p.Wz, x, az);
  matvec_add(p.Uz, h_prev, az);
  matvec(p.Wr, x, ar);
  matvec_add(p.Ur, h_prev, ar);
  for (int i = 0; i < h; ++i) {
    c.z[i] = sigmoid(az[i] + p.bz[i]);
    c.r[i] = sigmoid(ar[i] + p.br[i]);
    rh[i] = c.r[i] * h_prev[i];
  }
  matvec(p.Wh, x, ah);
  matvec_add(p.Uh, rh, ah);
  for (int i = 0; i < h; ++i) {
    c.hcand[i] = std::tanh(ah[i] + p.bh[i]);
    c.h[i] = (1.0 - c.z[i]) * h_prev[i] + c.z[i] * c.hcand[i];
  }
  return c;
}

std::pair<ProbabilityGrid, ForwardCache> model_forward(const Matrix& features,
                                                       const ModelParams& params,
                                                       double dropout_rate, bool training,
                                                       std::mt19937_64& rng) {
  check_shapes(params);
  const int t_len = features.rows();
  const int h = params.hidden();
  const int k = params.k_steps();
  const int num_layers = static_cast<int>(params.layers.size());
  const bool use_dropout = training && dropout_rate > 0.0;

  ForwardCache cache;
  cache.t = t_len;
  cache.steps.resize(num_layers);
  if (use_dropout) {
    cache.dropout_masks.assign(num_layers, Matrix());
    std::bernoulli_distribution keep(1.0 - dropout_rate);
    for (int l = 1; l < num_layers; ++l) {
      cache.dropout_masks[l] = Matrix(t_len, h);
      for (auto& v : cache.dropout_masks[l].data())
        v = keep(rng) ? 1.0 / (1.0 - dropout_rate) : 0.0;
    }
  }

  ProbabilityGrid grid;
  grid.start = Matrix(t_len, k);
  grid.end = Matrix(t_len, k);
  grid.action = Matrix(t_len, k);

  const int third = h / 3;
  Vec zero_h(h, 0.0);
  Vec dropped(h);
  for (int l = 0; l < num_layers; ++l) cache.steps[l].reserve(t_len);

  for (int t = 0; t < t_len; ++t) {
    std::span<const double> input = features.row(t);
    for (int l = 0; l < num_layers; ++l) {
      if (l > 0) {
        const auto& below = cache.steps[l - 1][t].h;
        if (use_dropout) {
          auto mask = cache.dropout_masks[l].row(t);
          for (int i = 0; i < h; ++i) dropped[i] = below[i] * mask[i];
          input = dropped;
        } else {
          input = below;
        }
      }
      std::span<const double> h_prev = t > 0 ? std::span<const double>(cache.steps[l][t - 1].h)
                                             : std::span<const double>(zero_h);
      cache.steps[l].push_back(gru_cell_forward(input, h_prev, params.layers[l]));
    }

    const Vec& top = cache.steps[num_layers - 1][t].h;
    auto head_row = [&](const Matrix& a, const Vec& b, int offset, Matrix& out) {
      for (int kk = 0; kk < k; ++kk) {
        double acc = b[kk];
        const auto w = a.row(kk);
        for (int i = 0; i < third; ++i) acc += w[i] * top[offset + i];
        out(t, kk) = sigmoid(acc);
      }
    };
    head_row(params.head.Astart, params.head.bstart, 0, grid.start);
    head_row(params.head.Aend, params.head.bend, third, grid.end);
    head_row(params.head.Aaction, params.head.baction, 2 * third, grid.action);
  }
  return {std::move(grid), std::move(cache)};
}

LossGrads weighted_bce_loss(const ProbabilityGrid& grid, const dataset::UnitTargets& targets,
                            double beta, int valid_len) {
  if (beta <= 0.0) throw ConfigError("beta must be positive");
  const int t_len = grid.steps();
  const int k = grid.k_steps();
  valid_len = std::min(valid_len, t_len);

  LossGrads out;
  out.dstart = Matrix(t_len, k);
  out.dend = Matrix(t_len, k);
  out.daction = Matrix(t_len, k);

  long long count = 0;
  for (int t = 0; t < valid_len; ++t) count += std::min(t + 1, k);
  if (count == 0) return out;

  auto channel = [&](const Matrix& probs, const std::vector<uint8_t>& y, Matrix& dlogits) {
    double sum = 0.0;
    for (int t = 0; t < valid_len; ++t) {
      for (int kk = 0; kk < std::min(t + 1, k); ++kk) {
        const int unit = t - kk;
        const double target = y[unit];
        const double p = std::clamp(probs(t, kk), kProbEps, 1.0 - kProbEps);
        sum += -beta * target * std::log(p) - (1.0 - target) * std::log(1.0 - p);
        // d/dlogit of the clamped-log loss, with p = sigmoid(logit)
        dlogits(t, kk) = (-beta * target * (1.0 - p) + (1.0 - target) * p) /
                         static_cast<double>(count);
      }
    }
    return sum / static_cast<double>(count);
  };

  out.loss = channel(grid.start, targets.start, out.dstart) +
             channel(grid.end, targets.end, out.dend) +
             channel(grid.action, targets.action, out.daction);
  return out;
}

void model_backward(const Matrix& features, const ForwardCache& cache, const LossGrads& dl,
                    const ModelParams& params, double lambda, ModelParams& grads) {
  const int t_len = cache.t;
  const int h = params.hidden();
  const int k = params.k_steps();
  const int num_layers = static_cast<int>(params.layers.size());
  const int third = h / 3;
  const bool use_dropout = !cache.dropout_masks.empty();

  // Gradient flowing into each layer's hidden state from above (head or the
  // next stacked layer), one T x H buffer per layer.
  std::vector<Matrix> dh_above(num_layers);
  for (int l = 0; l < num_layers; ++l) dh_above[l] = Matrix(t_len, h);

  // Head backward fills dh_above for the top layer.
  auto& gh = grads.head;
  for (int t = 0; t < t_len; ++t) {
    const Vec& top = cache.steps[num_layers - 1][t].h;
    auto dtop = dh_above[num_layers - 1].row(t);
    auto head_back = [&](const Matrix& a, Matrix& ga, Vec& gb, const Matrix& dlogits,
                         int offset) {
      for (int kk = 0; kk < k; ++kk) {
        const double d = dlogits(t, kk);
        if (d == 0.0) continue;
        gb[kk] += d;
        const auto w = a.row(kk);
        auto gw = ga.row(kk);
        for (int i = 0; i < third; ++i) {
          gw[i] += d * top[offset + i];
          dtop[offset + i] += d * w[i];
        }
      }
    };
    head_back(params.head.Astart, gh.Astart, gh.bstart, dl.dstart, 0);
    head_back(params.head.Aend, gh.Aend, gh.bend, dl.dend, third);
    head_back(params.head.Aaction, gh.Aaction, gh.baction, dl.daction, 2 * third);
  }

  // BPTT, top layer first so dh_above for the layer below is complete.
  Vec zero_h(h, 0.0), dh(h), dh_prev(h), da_z(h), da_r(h), da_h(h), drh(h), rh(h);
  for (int l = num_layers - 1; l >= 0; --l) {
    const auto& lp = params.layers[l];
    auto& gl = grads.layers[l];
    const int din = lp.input_dim();
    Vec dx(din);
    Vec dh_carry(h, 0.0);
    for (int t = t_len - 1; t >= 0; --t) {
      const auto& c = cache.steps[l][t];
      std::span<const double> h_prev =
          t > 0 ? std::span<const double>(cache.steps[l][t - 1].h)
                : std::span<const double>(zero_h);
      const auto above = dh_above[l].row(t);
      for (int i = 0; i < h; ++i) dh[i] = above[i] + dh_carry[i];

      for (int i = 0; i < h; ++i) {
        const double dhc = dh[i] * c.z[i];
        const double dz = dh[i] * (c.hcand[i] - h_prev[i]);
        dh_prev[i] = dh[i] * (1.0 - c.z[i]);
        da_h[i] = dhc * (1.0 - c.hcand[i] * c.hcand[i]);
        da_z[i] = dz * c.z[i] * (1.0 - c.z[i]);
        rh[i] = c.r[i] * h_prev[i];
      }
      std::fill(dx.begin(), dx.end(), 0.0);
      // hcand path
      add_outer(gl.Wh, da_h, c.x);
      for (int i = 0; i < h; ++i) gl.bh[i] += da_h[i];
      std::fill(drh.begin(), drh.end(), 0.0);
      tmatvec_add(lp.Uh, da_h, drh);
      tmatvec_add(lp.Wh, da_h, dx);
      add_outer(gl.Uh, da_h, rh);
      for (int i = 0; i < h; ++i) {
        const double dr = drh[i] * h_prev[i];
        dh_prev[i] += drh[i] * c.r[i];
        da_r[i] = dr * c.r[i] * (1.0 - c.r[i]);
      }
      // update gate path
      add_outer(gl.Wz, da_z, c.x);
      for (int i = 0; i < h; ++i) gl.bz[i] += da_z[i];
      tmatvec_add(lp.Uz, da_z, dh_prev);
      tmatvec_add(lp.Wz, da_z, dx);
      add_outer(gl.Uz, da_z, h_prev);
      // reset gate path
      add_outer(gl.Wr, da_r, c.x);
      for (int i = 0; i < h; ++i) gl.br[i] += da_r[i];
      tmatvec_add(lp.Ur, da_r, dh_prev);
      tmatvec_add(lp.Wr, da_r, dx);
      add_outer(gl.Ur, da_r, h_prev);

      if (l > 0) {
        auto below = dh_above[l - 1].row(t);
        if (use_dropout) {
          const auto mask = cache.dropout_masks[l].row(t);
          for (int i = 0; i < h; ++i) below[i] += dx[i] * mask[i];
        } else {
          for (int i = 0; i < h; ++i) below[i] += dx[i];
        }
      }
      dh_carry = dh_prev;
    }
  }
  (void)features;

  if (lambda != 0.0) {
    auto ps = collect_tensors(const_cast<ModelParams&>(params));
    auto gs = collect_tensors(grads);
    for (size_t i = 0; i < ps.size(); ++i) {
      if (!ps[i].is_weight) continue;
      for (size_t j = 0; j < ps[i].size; ++j) gs[i].data[j] += lambda * ps[i].data[j];
    }
  }
}

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, double lr,
               double beta1, double beta2, double eps) {
  state.step += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  auto ps = collect_tensors(params);
  auto gs = collect_tensors(const_cast<ModelParams&>(grads));
  auto ms = collect_tensors(state.m);
  auto vs = collect_tensors(state.v);
  for (size_t i = 0; i < ps.size(); ++i) {
    for (size_t j = 0; j < ps[i].size; ++j) {
      const double g = gs[i].data[j];
      double& m = ms[i].data[j];
      double& v = vs[i].data[j];
      m = beta1 * m + (1.0 - beta1) * g;
      v = beta2 * v + (1.0 - beta2) * g * g;
      const double mhat = m / bc1;
      const double vhat = v / bc2;
      ps[i].data[j] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

double l2_penalty(const ModelParams& p, double lambda) {
  double sum = 0.0;
  for (const auto& t : collect_tensors(const_cast<ModelParams&>(p))) {
    if (!t.is_weight) continue;
    for (size_t i = 0; i < t.size; ++i) sum += t.data[i] * t.data[i];
  }
  return 0.5 * lambda * sum;
}

void save_model(const ModelParams& params, const ModelHyperparams& hp,
                const std::filesystem::path& path) {
  json tensors;
  for (size_t l = 0; l < params.layers.size(); ++l) {
    const auto& lp = params.layers[l];
    const std::string pre = "layer" + std::to_string(l) + ".";
    tensors[pre + "Wz"] = matrix_to_json(lp.Wz);
    tensors[pre + "Wr"] = matrix_to_json(lp.Wr);
    tensors[pre + "Wh"] = matrix_to_json(lp.Wh);
    tensors[pre + "Uz"] = matrix_to_json(lp.Uz);
    tensors[pre + "Ur"] = matrix_to_json(lp.Ur);
    tensors[pre + "Uh"] = matrix_to_json(lp.Uh);
    tensors[pre + "bz"] = vec_to_json(lp.bz);
    tensors[pre + "br"] = vec_to_json(lp.br);
    tensors[pre + "bh"] = vec_to_json(lp.bh);
  }
  tensors["head.Astart"] = matrix_to_json(params.head.Astart);
  tensors["head.Aend"] = matrix_to_json(params.head.Aend);
  tensors["head.Aaction"] = matrix_to_json(params.head.Aaction);
  tensors["head.bstart"] = vec_to_json(params.head.bstart);
  tensors["head.bend"] = vec_to_json(params.head.bend);
  tensors["head.baction"] = vec_to_json(params.head.baction);

  json j = {{"format", "tal.checkpoint"},
            {"type", "probability_model"},
            {"version", 1},
            {"hparams",
             {{"input_dim", hp.input_dim},
              {"hidden_size", hp.hidden_size},
              {"num_layers", hp.num_layers},
              {"k_steps", hp.k_steps}}},
            {"tensors", std::move(tensors)}};
  std::ofstream out(path);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out << j.dump() << "\n";
}

std::pair<ModelParams, ModelHyperparams> load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("checkpoint not found: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError("checkpoint " + path.string() + ": " + e.what());
  }
  try {
    if (j.at("format") != "tal.checkpoint" || j.at("type") != "probability_model")
      throw ParseError("checkpoint " + path.string() + ": unexpected container type");
    ModelHyperparams hp;
    hp.input_dim = j.at("hparams").at("input_dim").get<int>();
    hp.hidden_size = j.at("hparams").at("hidden_size").get<int>();
    hp.num_layers = j.at("hparams").at("num_layers").get<int>();
    hp.k_steps = j.at("hparams").at("k_steps").get<int>();
    const auto& tensors = j.at("tensors");
    ModelParams p;
    for (int l = 0; l < hp.num_layers; ++l) {
      const std::string pre = "layer" + std::to_string(l) + ".";
      GruLayerParams lp;
      lp.Wz = matrix_from_json(tensors.at(pre + "Wz"));
      lp.Wr = matrix_from_json(tensors.at(pre + "Wr"));
      lp.Wh = matrix_from_json(tensors.at(pre + "Wh"));
      lp.Uz = matrix_from_json(tensors.at(pre + "Uz"));
      lp.Ur = matrix_from_json(tensors.at(pre + "Ur"));
      lp.Uh = matrix_from_json(tensors.at(pre + "Uh"));
      lp.bz = vec_from_json(tensors.at(pre + "bz"));
      lp.br = vec_from_json(tensors.at(pre + "br"));
      lp.bh = vec_from_json(tensors.at(pre + "bh"));
      p.layers.push_back(std::move(lp));
    }
    p.head.Astart = matrix_from_json(tensors.at("head.Astart"));
    p.head.Aend = matrix_from_json(tensors.at("head.Aend"));
    p.head.Aaction = matrix_from_json(tensors.at("head.Aaction"));
    p.head.bstart = vec_from_json(tensors.at("head.bstart"));
    p.head.bend = vec_from_json(tensors.at("head.bend"));
    p.head.baction = vec_from_json(tensors.at("head.baction"));
    return {std::move(p), hp};
  } catch (const json::exception& e) {
    throw ParseError("checkpoint " + path.string() + ": " + e.what());
  }
}

}  // namespace tal::network
