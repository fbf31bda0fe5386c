// Copyright 2026 The morphdesk Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MORPH_SEQ2SEQ_H_
#define MORPH_SEQ2SEQ_H_

// Character-level LSTM encoder-decoder with hand-written backpropagation
// through time. Parameters live in one flat buffer so that optimizers,
// serialization and finite-difference checks can treat them uniformly.
//
// All sequences in a batch are processed together as matrix columns;
// shorter encoder inputs are left-aligned with masked (state-preserving)
// steps in front, shorter decoder targets are masked at the end.

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace morph::nn {

struct Dims {
  int vocab = 0;
  int embedding = 128;
  int hidden = 128;
  int layers = 2;
};

// A batch of integer-coded sequences. `source[b]` is fed to the encoder in
// order; `target[b]` excludes BOS/EOS, which the network adds itself.
struct Batch {
  std::vector<std::vector<int>> source;
  std::vector<std::vector<int>> target;
};

template <typename T>
class Seq2Seq {
 public:
  using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
  using MatMap = Eigen::Map<Mat>;
  using VecMap = Eigen::Map<Vec>;
  using CMatMap = Eigen::Map<const Mat>;
  using CVecMap = Eigen::Map<const Vec>;

  Seq2Seq(Dims dims, int bos, int eos) : dims_(dims), bos_(bos), eos_(eos) {
    std::int64_t offset = 0;
    auto take = [&offset](std::int64_t n) {
      std::int64_t at = offset;
      offset += n;
      return at;
    };
    const int E = dims_.embedding, H = dims_.hidden, V = dims_.vocab;
    enc_embed_ = take(std::int64_t{E} * V);
    dec_embed_ = take(std::int64_t{E} * V);
    for (int side = 0; side < 2; ++side) {
      for (int l = 0; l < dims_.layers; ++l) {
        const int in = l == 0 ? E : H;
        LayerOffsets lo;
        lo.in = in;
        lo.w = take(std::int64_t{4} * H * in);
        lo.u = take(std::int64_t{4} * H * H);
        lo.b = take(std::int64_t{4} * H);
        (side == 0 ? enc_ : dec_).push_back(lo);
      }
    }
    out_w_ = take(std::int64_t{V} * H);
    out_b_ = take(V);
    param_count_ = offset;
  }

  const Dims& dims() const { return dims_; }
  std::int64_t ParamCount() const { return param_count_; }

  // Index ranges of LSTM bias vectors; the forget-gate slice of each is
  // initialized to 1.
  std::vector<std::int64_t> ForgetBiasOffsets() const {
    std::vector<std::int64_t> out;
    for (const auto* side : {&enc_, &dec_}) {
      for (const LayerOffsets& lo : *side) out.push_back(lo.b + dims_.hidden);
    }
    return out;
  }

  // Mean cross-entropy per target token (EOS included) under teacher
  // forcing. When `grad` is non-null it must have ParamCount() entries and
  // receives d(loss)/d(params) (overwritten, not accumulated).
  T Loss(std::span<const T> params, const Batch& batch, std::span<T> grad) const {
    const bool want_grad = !grad.empty();
    const int B = static_cast<int>(batch.source.size());
    const int H = dims_.hidden;
    const int L = dims_.layers;
    const int V = dims_.vocab;

    // ---- encoder inputs, left-padded
    int t_enc = 0;
    for (const auto& s : batch.source) t_enc = std::max<int>(t_enc, static_cast<int>(s.size()));
    std::vector<std::vector<int>> enc_tok(t_enc, std::vector<int>(B, -1));
    for (int b = 0; b < B; ++b) {
      const auto& s = batch.source[b];
      const int pad = t_enc - static_cast<int>(s.size());
      for (size_t k = 0; k < s.size(); ++k) enc_tok[pad + k][b] = s[k];
    }
    // ---- decoder inputs [BOS, y...] and outputs [y..., EOS]
    int t_dec = 0;
    int n_tokens = 0;
    for (const auto& y : batch.target) {
      t_dec = std::max<int>(t_dec, static_cast<int>(y.size()) + 1);
      n_tokens += static_cast<int>(y.size()) + 1;
    }
    std::vector<std::vector<int>> dec_in(t_dec, std::vector<int>(B, -1));
    std::vector<std::vector<int>> dec_out(t_dec, std::vector<int>(B, -1));
    for (int b = 0; b < B; ++b) {
      const auto& y = batch.target[b];
      for (int t = 0; t <= static_cast<int>(y.size()); ++t) {
        dec_in[t][b] = t == 0 ? bos_ : y[t - 1];
        dec_out[t][b] = t == static_cast<int>(y.size()) ? eos_ : y[t];
      }
    }

    std::vector<Mat> h(L, Mat::Zero(H, B)), c(L, Mat::Zero(H, B));
    std::vector<std::vector<StepCache>> enc_cache(L, std::vector<StepCache>(t_enc));
    std::vector<std::vector<StepCache>> dec_cache(L, std::vector<StepCache>(t_dec));

    CMatMap enc_embed(params.data() + enc_embed_, dims_.embedding, V);
    CMatMap dec_embed(params.data() + dec_embed_, dims_.embedding, V);

    for (int t = 0; t < t_enc; ++t) {
      Mat x = Gather(enc_embed, enc_tok[t]);
      for (int l = 0; l < L; ++l) {
        StepForward(params, enc_[l], x, enc_tok[t], h[l], c[l], &enc_cache[l][t]);
        x = h[l];
      }
    }

    CMatMap out_w(params.data() + out_w_, V, H);
    CVecMap out_b(params.data() + out_b_, V);
    std::vector<Mat> probs(t_dec);
    std::vector<Mat> top(t_dec);
    T loss = 0;
    for (int t = 0; t < t_dec; ++t) {
      Mat x = Gather(dec_embed, dec_in[t]);
      for (int l = 0; l < L; ++l) {
        StepForward(params, dec_[l], x, dec_in[t], h[l], c[l], &dec_cache[l][t]);
        x = h[l];
      }
      top[t] = x;
      Mat logits = out_w * x;
      logits.colwise() += out_b;
      Softmax(logits);
      for (int b = 0; b < B; ++b) {
        const int y = dec_out[t][b];
        if (y >= 0) loss -= std::log(std::max(logits(y, b), T(1e-30)));
      }
      probs[t] = std::move(logits);
    }
    loss /= static_cast<T>(n_tokens);
    if (!want_grad) return loss;

    // ---- backward
    std::fill(grad.begin(), grad.end(), T(0));
    MatMap g_out_w(grad.data() + out_w_, V, H);
    VecMap g_out_b(grad.data() + out_b_, V);
    MatMap g_enc_embed(grad.data() + enc_embed_, dims_.embedding, V);
    MatMap g_dec_embed(grad.data() + dec_embed_, dims_.embedding, V);
    const T scale = T(1) / static_cast<T>(n_tokens);

    std::vector<Mat> dh(L, Mat::Zero(H, B)), dc(L, Mat::Zero(H, B));
    for (int t = t_dec - 1; t >= 0; --t) {
      Mat& d_logits = probs[t];
      for (int b = 0; b < B; ++b) {
        const int y = dec_out[t][b];
        if (y < 0) {
          d_logits.col(b).setZero();
        } else {
          d_logits(y, b) -= T(1);
        }
      }
      d_logits *= scale;
      g_out_w.noalias() += d_logits * top[t].transpose();
      g_out_b.noalias() += d_logits.rowwise().sum();
      Mat d_above = out_w.transpose() * d_logits;
      for (int l = L - 1; l >= 0; --l) {
        dh[l] += d_above;
        d_above = StepBackward(params, grad, dec_[l], dec_cache[l][t], dh[l], dc[l]);
      }
      ScatterAdd(g_dec_embed, dec_in[t], d_above);
    }
    for (int t = t_enc - 1; t >= 0; --t) {
      Mat d_above;
      for (int l = L - 1; l >= 0; --l) {
        if (l < L - 1) dh[l] += d_above;
        d_above = StepBackward(params, grad, enc_[l], enc_cache[l][t], dh[l], dc[l]);
      }
      ScatterAdd(g_enc_embed, enc_tok[t], d_above);
    }
    return loss;
  }

  // Greedy decoding for a batch of encoder inputs. For each column returns
  // the chosen token ids (EOS excluded) and the log-probability of every
  // chosen token (EOS included when emitted). `allowed` marks output ids
  // eligible for selection.
  struct Decoded {
    std::vector<int> tokens;
    std::vector<T> log_probs;
  };

  std::vector<Decoded> Greedy(std::span<const T> params,
                              const std::vector<std::vector<int>>& sources,
                              const std::vector<bool>& allowed, int max_len) const {
    const int B = static_cast<int>(sources.size());
    const int H = dims_.hidden;
    const int L = dims_.layers;
    const int V = dims_.vocab;
    std::vector<Decoded> result(B);
    if (B == 0) return result;

    int t_enc = 0;
    for (const auto& s : sources) t_enc = std::max<int>(t_enc, static_cast<int>(s.size()));
    std::vector<Mat> h(L, Mat::Zero(H, B)), c(L, Mat::Zero(H, B));
    CMatMap enc_embed(params.data() + enc_embed_, dims_.embedding, V);
    CMatMap dec_embed(params.data() + dec_embed_, dims_.embedding, V);
    std::vector<int> tok(B);
    for (int t = 0; t < t_enc; ++t) {
      for (int b = 0; b < B; ++b) {
        const int pad = t_enc - static_cast<int>(sources[b].size());
        tok[b] = t < pad ? -1 : sources[b][t - pad];
      }
      Mat x = Gather(enc_embed, tok);
      for (int l = 0; l < L; ++l) {
        StepForward(params, enc_[l], x, tok, h[l], c[l], nullptr);
        x = h[l];
      }
    }

    CMatMap out_w(params.data() + out_w_, V, H);
    CVecMap out_b(params.data() + out_b_, V);
    std::vector<bool> done(B, false);
    std::fill(tok.begin(), tok.end(), bos_);
    for (int step = 0; step <= max_len; ++step) {
      Mat x = Gather(dec_embed, tok);
      for (int l = 0; l < L; ++l) {
        StepForward(params, dec_[l], x, tok, h[l], c[l], nullptr);
        x = h[l];
      }
      Mat logits = out_w * x;
      logits.colwise() += out_b;
      bool any_active = false;
      for (int b = 0; b < B; ++b) {
        if (done[b]) {
          tok[b] = -1;
          continue;
        }
        const T max_logit = logits.col(b).maxCoeff();
        T sum = 0;
        for (int v = 0; v < V; ++v) sum += std::exp(logits(v, b) - max_logit);
        const T log_z = max_logit + std::log(sum);
        int best = -1;
        for (int v = 0; v < V; ++v) {
          if (!allowed[v]) continue;
          // At the length limit only EOS may follow.
          if (step == max_len && v != eos_) continue;
          if (best < 0 || logits(v, b) > logits(best, b)) best = v;
        }
        result[b].log_probs.push_back(logits(best, b) - log_z);
        if (best == eos_) {
          done[b] = true;
          tok[b] = -1;
        } else {
          result[b].tokens.push_back(best);
          tok[b] = best;
          any_active = true;
        }
      }
      if (!any_active) break;
    }
    return result;
  }

 private:
  struct LayerOffsets {
    int in = 0;
    std::int64_t w = 0, u = 0, b = 0;
  };

  struct StepCache {
    Mat x, h_prev, c_prev, i, f, g, o, tanh_c;
    std::vector<int> active;  // column mask (token >= 0)
  };

  static Mat Gather(const CMatMap& embed, const std::vector<int>& tokens) {
    Mat x(embed.rows(), static_cast<Eigen::Index>(tokens.size()));
    for (size_t b = 0; b < tokens.size(); ++b) {
      if (tokens[b] >= 0) {
        x.col(b) = embed.col(tokens[b]);
      } else {
        x.col(b).setZero();
      }
    }
    return x;
  }

  static void ScatterAdd(MatMap& g_embed, const std::vector<int>& tokens, const Mat& dx) {
    for (size_t b = 0; b < tokens.size(); ++b) {
      if (tokens[b] >= 0) g_embed.col(tokens[b]) += dx.col(b);
    }
  }

  static void Softmax(Mat& logits) {
    for (Eigen::Index b = 0; b < logits.cols(); ++b) {
      auto col = logits.col(b);
      const T m = col.maxCoeff();
      col = (col.array() - m).exp();
      col /= col.sum();
    }
  }

  // One LSTM step over all columns. Inactive columns (token < 0) keep their
  // previous state.
  void StepForward(std::span<const T> params, const LayerOffsets& lo, const Mat& x,
                   const std::vector<int>& tokens, Mat& h, Mat& c, StepCache* cache) const {
    const int H = dims_.hidden;
    const Eigen::Index B = x.cols();
    CMatMap w(params.data() + lo.w, 4 * H, lo.in);
    CMatMap u(params.data() + lo.u, 4 * H, H);
    CVecMap bias(params.data() + lo.b, 4 * H);
    Mat z = w * x;
    z.noalias() += u * h;
    z.colwise() += bias;
    Mat i = Sigmoid(z.topRows(H));
    Mat f = Sigmoid(z.middleRows(H, H));
    Mat g = z.middleRows(2 * H, H).array().tanh().matrix();
    Mat o = Sigmoid(z.bottomRows(H));
    Mat c_new = (f.array() * c.array() + i.array() * g.array()).matrix();
    Mat tanh_c = c_new.array().tanh().matrix();
    Mat h_new = (o.array() * tanh_c.array()).matrix();
    if (cache != nullptr) {
      cache->x = x;
      cache->h_prev = h;
      cache->c_prev = c;
      cache->active.assign(tokens.begin(), tokens.end());
    }
    for (Eigen::Index b = 0; b < B; ++b) {
      if (tokens[b] >= 0) {
        h.col(b) = h_new.col(b);
        c.col(b) = c_new.col(b);
      }
    }
    if (cache != nullptr) {
      cache->i = std::move(i);
      cache->f = std::move(f);
      cache->g = std::move(g);
      cache->o = std::move(o);
      cache->tanh_c = std::move(tanh_c);
    }
  }

  // Consumes dh/dc (gradients w.r.t. this step's output state), leaves in
  // them the gradients w.r.t. the previous state, accumulates parameter
  // gradients and returns the gradient w.r.t. the step input.
  Mat StepBackward(std::span<const T> params, std::span<T> grad, const LayerOffsets& lo,
                   const StepCache& cache, Mat& dh, Mat& dc) const {
    const int H = dims_.hidden;
    const Eigen::Index B = dh.cols();
    CMatMap w(params.data() + lo.w, 4 * H, lo.in);
    CMatMap u(params.data() + lo.u, 4 * H, H);
    MatMap gw(grad.data() + lo.w, 4 * H, lo.in);
    MatMap gu(grad.data() + lo.u, 4 * H, H);
    VecMap gb(grad.data() + lo.b, 4 * H);

    // Split into the part flowing through this step (active columns) and the
    // pass-through part (inactive columns keep the previous state).
    Mat dh_new = Mat::Zero(H, B), dc_new = Mat::Zero(H, B);
    for (Eigen::Index b = 0; b < B; ++b) {
      if (cache.active[b] >= 0) {
        dh_new.col(b) = dh.col(b);
        dc_new.col(b) = dc.col(b);
        dh.col(b).setZero();
        dc.col(b).setZero();
      }
    }
    auto i = cache.i.array();
    auto f = cache.f.array();
    auto g = cache.g.array();
    auto o = cache.o.array();
    auto tc = cache.tanh_c.array();
    Mat dz(4 * H, B);
    Mat dct = (dc_new.array() + dh_new.array() * o * (T(1) - tc * tc)).matrix();
    dz.topRows(H) = (dct.array() * g * i * (T(1) - i)).matrix();
    dz.middleRows(H, H) = (dct.array() * cache.c_prev.array() * f * (T(1) - f)).matrix();
    dz.middleRows(2 * H, H) = (dct.array() * i * (T(1) - g * g)).matrix();
    dz.bottomRows(H) = (dh_new.array() * tc * o * (T(1) - o)).matrix();

    gw.noalias() += dz * cache.x.transpose();
    gu.noalias() += dz * cache.h_prev.transpose();
    gb.noalias() += dz.rowwise().sum();
    dh.noalias() += u.transpose() * dz;
    dc += (dct.array() * f).matrix();
    return w.transpose() * dz;
  }

  static Mat Sigmoid(const Mat& z) {
    return (T(1) / (T(1) + (-z.array()).exp())).matrix();
  }

  Dims dims_;
  int bos_;
  int eos_;
  std::int64_t enc_embed_ = 0, dec_embed_ = 0, out_w_ = 0, out_b_ = 0;
  std::vector<LayerOffsets> enc_, dec_;
  std::int64_t param_count_ = 0;
};

}  // namespace morph::nn

#endif  // MORPH_SEQ2SEQ_H_
