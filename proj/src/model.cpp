#include "dualfill/model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace dualfill {

std::string_view task_name(Task task) {
    switch (task) {
        case Task::TVP: return "TVP";
        case Task::TTP: return "TTP";
        case Task::SC: return "SC";
    }
    return "TVP";
}

std::string_view phase_name(Phase phase) {
    return phase == Phase::PRETRAIN ? "PRETRAIN" : "FINETUNE";
}

bool task_from_name(std::string_view name, Task& out) {
    if (name == "TVP") out = Task::TVP;
    else if (name == "TTP") out = Task::TTP;
    else if (name == "SC") out = Task::SC;
    else return false;
    return true;
}

bool phase_from_name(std::string_view name, Phase& out) {
    if (name == "PRETRAIN") out = Phase::PRETRAIN;
    else if (name == "FINETUNE") out = Phase::FINETUNE;
    else return false;
    return true;
}

void ModelConfig::validate() const {
    if (layers < 1) throw std::invalid_argument("config: layers must be positive");
    if (model_dim < 1 || heads < 1 || model_dim % heads != 0)
        throw std::invalid_argument("config: model_dim must be divisible by heads");
    if (ff_dim < 1) throw std::invalid_argument("config: ff_dim must be positive");
    if (max_seq_len < 2) throw std::invalid_argument("config: max_seq_len must be >= 2");
    if (value_vocab < 1 || type_vocab < 1)
        throw std::invalid_argument("config: vocab sizes must be positive");
    if (share_strength < 0.0)
        throw std::invalid_argument("config: share_strength must be non-negative");
}

StackParams& ModelParams::stack(Task task) {
    switch (task) {
        case Task::TVP: return tvp;
        case Task::TTP: return ttp;
        case Task::SC: return sc;
    }
    return tvp;
}

const StackParams& ModelParams::stack(Task task) const {
    return const_cast<ModelParams*>(this)->stack(task);
}

namespace {

void collect_refs(StackParams& s, std::vector<TensorRef>& out) {
    auto mat = [&out](const std::string& name, Mat& m, bool coupled) {
        out.push_back({name, m.data(), m.rows(), m.cols(), coupled});
    };
    auto vec = [&out](const std::string& name, Vec& v, bool coupled) {
        out.push_back({name, v.data(), v.size(), 1, coupled});
    };
    mat("token_embedding", s.token_embedding, false);
    mat("position_embedding", s.position_embedding, false);
    for (size_t l = 0; l < s.blocks.size(); ++l) {
        auto& b = s.blocks[l];
        std::string p = "blocks." + std::to_string(l) + ".";
        vec(p + "ln1.gain", b.ln1.gain, true);
        vec(p + "ln1.bias", b.ln1.bias, true);
        mat(p + "attn.wq", b.attn.wq, true);
        vec(p + "attn.bq", b.attn.bq, true);
        mat(p + "attn.wk", b.attn.wk, true);
        vec(p + "attn.bk", b.attn.bk, true);
        mat(p + "attn.wv", b.attn.wv, true);
        vec(p + "attn.bv", b.attn.bv, true);
        mat(p + "attn.wo", b.attn.wo, true);
        vec(p + "attn.bo", b.attn.bo, true);
        vec(p + "ln2.gain", b.ln2.gain, true);
        vec(p + "ln2.bias", b.ln2.bias, true);
        mat(p + "mlp.w1", b.mlp.w1, true);
        vec(p + "mlp.b1", b.mlp.b1, true);
        mat(p + "mlp.w2", b.mlp.w2, true);
        vec(p + "mlp.b2", b.mlp.b2, true);
    }
    vec("final_norm.gain", s.final_norm.gain, false);
    vec("final_norm.bias", s.final_norm.bias, false);
}

}  // namespace

std::vector<TensorRef> tensor_refs(StackParams& stack) {
    std::vector<TensorRef> out;
    collect_refs(stack, out);
    return out;
}

std::vector<TensorRef> tensor_refs(const StackParams& stack) {
    // read-only callers (penalty, serialization) share the mutable walk
    return tensor_refs(const_cast<StackParams&>(stack));
}

StackParams make_stack(const ModelConfig& config, int vocab) {
    StackParams s;
    s.token_embedding = Mat::Zero(vocab, config.model_dim);
    s.position_embedding = Mat::Zero(config.max_seq_len, config.model_dim);
    s.blocks.resize(static_cast<size_t>(config.layers));
    for (auto& b : s.blocks) {
        b.ln1.gain = Vec::Zero(config.model_dim);
        b.ln1.bias = Vec::Zero(config.model_dim);
        b.attn.wq = Mat::Zero(config.model_dim, config.model_dim);
        b.attn.wk = Mat::Zero(config.model_dim, config.model_dim);
        b.attn.wv = Mat::Zero(config.model_dim, config.model_dim);
        b.attn.wo = Mat::Zero(config.model_dim, config.model_dim);
        b.attn.bq = Vec::Zero(config.model_dim);
        b.attn.bk = Vec::Zero(config.model_dim);
        b.attn.bv = Vec::Zero(config.model_dim);
        b.attn.bo = Vec::Zero(config.model_dim);
        b.ln2.gain = Vec::Zero(config.model_dim);
        b.ln2.bias = Vec::Zero(config.model_dim);
        b.mlp.w1 = Mat::Zero(config.model_dim, config.ff_dim);
        b.mlp.b1 = Vec::Zero(config.ff_dim);
        b.mlp.w2 = Mat::Zero(config.ff_dim, config.model_dim);
        b.mlp.b2 = Vec::Zero(config.model_dim);
    }
    s.final_norm.gain = Vec::Zero(config.model_dim);
    s.final_norm.bias = Vec::Zero(config.model_dim);
    return s;
}

ModelParams make_params(const ModelConfig& config) {
    ModelParams p;
    p.tvp = make_stack(config, config.value_vocab);
    p.ttp = make_stack(config, config.type_vocab);
    p.sc = make_stack(config, config.value_vocab);
    return p;
}

namespace {

constexpr double kInitStd = 0.02;

void init_stack(StackParams& s, Rng& rng) {
    auto fill_normal = [&rng](Mat& m) {
        for (long c = 0; c < m.cols(); ++c)
            for (long r = 0; r < m.rows(); ++r) m(r, c) = rng.gaussian(0.0, kInitStd);
    };
    fill_normal(s.token_embedding);
    fill_normal(s.position_embedding);
    for (auto& b : s.blocks) {
        b.ln1.gain.setOnes();
        b.ln2.gain.setOnes();
        fill_normal(b.attn.wq);
        fill_normal(b.attn.wk);
        fill_normal(b.attn.wv);
        fill_normal(b.attn.wo);
        fill_normal(b.mlp.w1);
        fill_normal(b.mlp.w2);
    }
    s.final_norm.gain.setOnes();
}

}  // namespace

ModelParams init_params(const ModelConfig& config, uint64_t seed) {
    config.validate();
    ModelParams p = make_params(config);
    Rng rng(seed);
    init_stack(p.tvp, rng);
    init_stack(p.ttp, rng);
    init_stack(p.sc, rng);
    return p;
}

namespace {

constexpr double kLnEps = 1e-5;

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

double gelu_grad(double x) {
    constexpr double inv_sqrt_2pi = 0.3989422804014327;
    return 0.5 * (1.0 + std::erf(x / std::sqrt(2.0))) +
           x * inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

struct LayerNormCache {
    Mat normalized;  // T x d
    Vec inv_std;     // T
};

Mat layernorm_forward(const Mat& x, const LayerNormParams& p, LayerNormCache& cache) {
    const long T = x.rows(), d = x.cols();
    cache.normalized.resize(T, d);
    cache.inv_std.resize(T);
    Mat y(T, d);
    for (long t = 0; t < T; ++t) {
        double mean = x.row(t).mean();
        double var = (x.row(t).array() - mean).square().mean();
        double inv_std = 1.0 / std::sqrt(var + kLnEps);
        cache.inv_std(t) = inv_std;
        cache.normalized.row(t) = (x.row(t).array() - mean) * inv_std;
        y.row(t) = cache.normalized.row(t).cwiseProduct(p.gain.transpose()) +
                   p.bias.transpose();
    }
    return y;
}

// Accumulates parameter gradients and returns the input gradient.
Mat layernorm_backward(const Mat& dy, const LayerNormParams& p,
                       const LayerNormCache& cache, LayerNormParams& grad) {
    const long T = dy.rows(), d = dy.cols();
    Mat dx(T, d);
    for (long t = 0; t < T; ++t) {
        grad.gain += dy.row(t).cwiseProduct(cache.normalized.row(t)).transpose();
        grad.bias += dy.row(t).transpose();
        Eigen::RowVectorXd dxhat = dy.row(t).cwiseProduct(p.gain.transpose());
        double mean_dxhat = dxhat.mean();
        double mean_dxhat_xhat = dxhat.cwiseProduct(cache.normalized.row(t)).mean();
        dx.row(t) = cache.inv_std(t) *
                    (dxhat.array() - mean_dxhat -
                     cache.normalized.row(t).array() * mean_dxhat_xhat);
    }
    return dx;
}

void softmax_rows_inplace(Mat& m) {
    for (long r = 0; r < m.rows(); ++r) {
        double mx = m.row(r).maxCoeff();
        m.row(r) = (m.row(r).array() - mx).exp();
        m.row(r) /= m.row(r).sum();
    }
}

struct BlockCache {
    Mat input;  // block input, T x d
    LayerNormCache ln1;
    Mat x1;                // post-ln1
    Mat q, k, v;           // T x d
    std::vector<Mat> att;  // per-head attention weights, T x T
    Mat att_concat;        // heads merged, pre-projection
    Mat mid;               // input + attention output
    LayerNormCache ln2;
    Mat x2;      // post-ln2
    Mat ff_pre;  // T x ff
    Mat ff_act;
};

struct RowCache {
    Mat h0;
    std::vector<BlockCache> blocks;
    LayerNormCache final_ln;
    Mat final_in;
    Mat final_out;
    Mat logits;  // T x vocab
    Mat probs;
};

void check_ids(const std::vector<int>& ids, int vocab, int max_seq_len) {
    if (static_cast<int>(ids.size()) > max_seq_len)
        throw std::invalid_argument("sequence longer than max_seq_len");
    for (int id : ids)
        if (id < 0 || id >= vocab)
            throw std::out_of_range("token id out of range: " + std::to_string(id));
}

// Blocks plus final norm over cache.h0, which must be filled already.
void trunk_forward(const StackParams& s, const ModelConfig& config, RowCache& cache) {
    const long T = cache.h0.rows();
    const long d = config.model_dim;
    const long hd = d / config.heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(hd));

    Mat h = cache.h0;
    cache.blocks.resize(s.blocks.size());
    for (size_t l = 0; l < s.blocks.size(); ++l) {
        const auto& b = s.blocks[l];
        auto& c = cache.blocks[l];
        c.input = h;
        c.x1 = layernorm_forward(h, b.ln1, c.ln1);
        c.q = (c.x1 * b.attn.wq).rowwise() + b.attn.bq.transpose();
        c.k = (c.x1 * b.attn.wk).rowwise() + b.attn.bk.transpose();
        c.v = (c.x1 * b.attn.wv).rowwise() + b.attn.bv.transpose();

        c.att.assign(static_cast<size_t>(config.heads), Mat());
        c.att_concat.resize(T, d);
        for (int head = 0; head < config.heads; ++head) {
            auto qh = c.q.middleCols(head * hd, hd);
            auto kh = c.k.middleCols(head * hd, hd);
            auto vh = c.v.middleCols(head * hd, hd);
            Mat scores = qh * kh.transpose() * scale;
            for (long i = 0; i < T; ++i)
                for (long j = i + 1; j < T; ++j)
                    scores(i, j) = -std::numeric_limits<double>::infinity();
            softmax_rows_inplace(scores);
            c.att[static_cast<size_t>(head)] = scores;
            c.att_concat.middleCols(head * hd, hd) = scores * vh;
        }
        Mat attn_out = (c.att_concat * b.attn.wo).rowwise() + b.attn.bo.transpose();
        c.mid = c.input + attn_out;

        c.x2 = layernorm_forward(c.mid, b.ln2, c.ln2);
        c.ff_pre = (c.x2 * b.mlp.w1).rowwise() + b.mlp.b1.transpose();
        c.ff_act = c.ff_pre.unaryExpr([](double x) { return gelu(x); });
        h = c.mid + ((c.ff_act * b.mlp.w2).rowwise() + b.mlp.b2.transpose());
    }
    cache.final_in = h;
    cache.final_out = layernorm_forward(h, s.final_norm, cache.final_ln);
}

// Forward over one row, filling the cache needed for the backward pass.
void stack_forward(const StackParams& s, const ModelConfig& config,
                   const std::vector<int>& ids, RowCache& cache) {
    const long T = static_cast<long>(ids.size());
    cache.h0.resize(T, config.model_dim);
    for (long t = 0; t < T; ++t)
        cache.h0.row(t) =
            s.token_embedding.row(ids[static_cast<size_t>(t)]) + s.position_embedding.row(t);
    trunk_forward(s, config, cache);
    cache.logits = cache.final_out * s.token_embedding.transpose();
    cache.probs = cache.logits;
    softmax_rows_inplace(cache.probs);
}

// Backward through blocks and final norm; returns d(loss)/d(h0).
Mat trunk_backward(const StackParams& s, const ModelConfig& config,
                   const RowCache& cache, const Mat& dfinal_out, StackParams& grad) {
    const long T = cache.h0.rows();
    const long d = config.model_dim;
    const long hd = d / config.heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(hd));

    Mat dh = layernorm_backward(dfinal_out, s.final_norm, cache.final_ln, grad.final_norm);

    for (size_t l = s.blocks.size(); l-- > 0;) {
        const auto& b = s.blocks[l];
        const auto& c = cache.blocks[l];
        auto& g = grad.blocks[l];

        // h = mid + ff(x2)
        const Mat& dff = dh;
        g.mlp.w2 += c.ff_act.transpose() * dff;
        g.mlp.b2 += dff.colwise().sum().transpose();
        Mat dact = dff * b.mlp.w2.transpose();
        Mat dpre = dact.cwiseProduct(
            c.ff_pre.unaryExpr([](double x) { return gelu_grad(x); }));
        g.mlp.w1 += c.x2.transpose() * dpre;
        g.mlp.b1 += dpre.colwise().sum().transpose();
        Mat dx2 = dpre * b.mlp.w1.transpose();
        Mat dmid = dh + layernorm_backward(dx2, b.ln2, c.ln2, g.ln2);

        // mid = input + attn_out(x1)
        const Mat& dattn_out = dmid;
        g.attn.wo += c.att_concat.transpose() * dattn_out;
        g.attn.bo += dattn_out.colwise().sum().transpose();
        Mat datt_concat = dattn_out * b.attn.wo.transpose();

        Mat dq = Mat::Zero(T, d), dk = Mat::Zero(T, d), dv = Mat::Zero(T, d);
        for (int head = 0; head < config.heads; ++head) {
            auto qh = c.q.middleCols(head * hd, hd);
            auto kh = c.k.middleCols(head * hd, hd);
            auto vh = c.v.middleCols(head * hd, hd);
            const Mat& att = c.att[static_cast<size_t>(head)];
            auto dout = datt_concat.middleCols(head * hd, hd);

            dv.middleCols(head * hd, hd) = att.transpose() * dout;
            Mat datt = dout * vh.transpose();
            Mat dscores(T, T);
            for (long i = 0; i < T; ++i) {
                double dot = datt.row(i).cwiseProduct(att.row(i)).sum();
                dscores.row(i) =
                    (att.row(i).array() * (datt.row(i).array() - dot)).matrix();
            }
            dq.middleCols(head * hd, hd) = dscores * kh * scale;
            dk.middleCols(head * hd, hd) = dscores.transpose() * qh * scale;
        }
        g.attn.wq += c.x1.transpose() * dq;
        g.attn.bq += dq.colwise().sum().transpose();
        g.attn.wk += c.x1.transpose() * dk;
        g.attn.bk += dk.colwise().sum().transpose();
        g.attn.wv += c.x1.transpose() * dv;
        g.attn.bv += dv.colwise().sum().transpose();
        Mat dx1 = dq * b.attn.wq.transpose() + dk * b.attn.wk.transpose() +
                  dv * b.attn.wv.transpose();
        dh = dmid + layernorm_backward(dx1, b.ln1, c.ln1, g.ln1);
    }
    (void)T;
    return dh;
}

// Backward over one row given d(loss)/d(logits); accumulates into `grad`.
void stack_backward(const StackParams& s, const ModelConfig& config,
                    const std::vector<int>& ids, const RowCache& cache,
                    const Mat& dlogits, StackParams& grad) {
    // tied output projection: logits = final_out * W_e^T
    grad.token_embedding += dlogits.transpose() * cache.final_out;
    Mat dfinal_out = dlogits * s.token_embedding;
    Mat dh = trunk_backward(s, config, cache, dfinal_out, grad);
    for (long t = 0; t < dh.rows(); ++t) {
        grad.token_embedding.row(ids[static_cast<size_t>(t)]) += dh.row(t);
        grad.position_embedding.row(t) += dh.row(t);
    }
}

void check_batch(const ModelConfig& config, const Batch& batch) {
    if (batch.context.size() != batch.targets.size())
        throw std::invalid_argument("batch: context/targets row count mismatch");
    int vocab = config.vocab_for(batch.task);
    for (size_t r = 0; r < batch.context.size(); ++r) {
        if (batch.context[r].size() != batch.targets[r].size())
            throw std::invalid_argument("batch: row length mismatch");
        check_ids(batch.context[r], vocab, config.max_seq_len);
        for (int t : batch.targets[r])
            if (t >= vocab) throw std::out_of_range("target id out of range");
    }
}

}  // namespace

std::vector<Mat> forward(const ModelParams& params, const ModelConfig& config,
                         const Batch& batch) {
    config.validate();
    check_batch(config, batch);
    const StackParams& stack = params.stack(batch.task);
    std::vector<Mat> probs;
    probs.reserve(batch.context.size());
    for (const auto& row : batch.context) {
        RowCache cache;
        stack_forward(stack, config, row, cache);
        probs.push_back(std::move(cache.probs));
    }
    return probs;
}

std::vector<Mat> forward_logits(const ModelParams& params, const ModelConfig& config,
                                const Batch& batch) {
    config.validate();
    check_batch(config, batch);
    const StackParams& stack = params.stack(batch.task);
    std::vector<Mat> logits;
    logits.reserve(batch.context.size());
    for (const auto& row : batch.context) {
        RowCache cache;
        stack_forward(stack, config, row, cache);
        logits.push_back(std::move(cache.logits));
    }
    return logits;
}

double task_loss(const std::vector<Mat>& probabilities,
                 const std::vector<std::vector<int>>& targets) {
    if (probabilities.size() != targets.size())
        throw std::invalid_argument("task_loss: shape mismatch");
    double total = 0.0;
    long count = 0;
    for (size_t r = 0; r < probabilities.size(); ++r) {
        if (static_cast<size_t>(probabilities[r].rows()) != targets[r].size())
            throw std::invalid_argument("task_loss: row length mismatch");
        for (long t = 0; t < probabilities[r].rows(); ++t) {
            int target = targets[r][static_cast<size_t>(t)];
            if (target < 0) continue;
            total -= std::log(std::max(probabilities[r](t, target), 1e-300));
            ++count;
        }
    }
    return count == 0 ? 0.0 : total / static_cast<double>(count);
}

double joint_loss(double loss_tvp, double loss_ttp, double loss_sc, Phase phase) {
    return joint_loss_report(loss_tvp, loss_ttp, loss_sc, phase).value;
}

JointLossReport joint_loss_report(double loss_tvp, double loss_ttp, double loss_sc,
                                  Phase phase) {
    JointLossReport report;
    double best = loss_tvp;
    report.argmin = Task::TVP;
    report.sum = loss_tvp + loss_sc;
    if (phase == Phase::PRETRAIN) {
        report.sum += loss_ttp;
        if (loss_ttp < best) {
            best = loss_ttp;
            report.argmin = Task::TTP;
        }
    }
    if (loss_sc < best) {
        best = loss_sc;
        report.argmin = Task::SC;
    }
    report.value = std::abs(best);
    return report;
}

double sharing_penalty(const ModelParams& params, double lambda) {
    if (lambda == 0.0) return 0.0;
    auto refs_tvp = tensor_refs(params.tvp);
    auto refs_ttp = tensor_refs(params.ttp);
    auto refs_sc = tensor_refs(params.sc);
    auto accumulate = [](const std::vector<TensorRef>& a,
                         const std::vector<TensorRef>& b) {
        double total = 0.0;
        for (size_t i = 0; i < a.size(); ++i) {
            if (!a[i].coupled) continue;
            if (a[i].name != b[i].name || a[i].size() != b[i].size())
                throw std::invalid_argument("sharing_penalty: stack shape mismatch");
            for (long k = 0; k < a[i].size(); ++k) {
                double diff = a[i].data[k] - b[i].data[k];
                total += diff * diff;
            }
        }
        return total;
    };
    return lambda * (accumulate(refs_tvp, refs_ttp) + accumulate(refs_tvp, refs_sc) +
                     accumulate(refs_ttp, refs_sc));
}

ModelParams backward(const ModelParams& params, const ModelConfig& config,
                     const Batch& batch, Phase phase, double lambda) {
    config.validate();
    check_batch(config, batch);
    if (phase == Phase::FINETUNE && batch.task == Task::TTP)
        throw std::invalid_argument("backward: TTP batches are a pretraining task");

    ModelParams grads = make_params(config);
    const StackParams& stack = params.stack(batch.task);
    StackParams& stack_grad = grads.stack(batch.task);

    // cross entropy of the batch's task
    long count = 0;
    for (const auto& row : batch.targets)
        for (int t : row) count += t >= 0;
    for (size_t r = 0; r < batch.context.size(); ++r) {
        RowCache cache;
        stack_forward(stack, config, batch.context[r], cache);
        Mat dlogits = Mat::Zero(cache.probs.rows(), cache.probs.cols());
        for (long t = 0; t < cache.probs.rows(); ++t) {
            int target = batch.targets[r][static_cast<size_t>(t)];
            if (target < 0) continue;
            dlogits.row(t) = cache.probs.row(t) / static_cast<double>(count);
            dlogits(t, target) -= 1.0 / static_cast<double>(count);
        }
        stack_backward(stack, config, batch.context[r], cache, dlogits, stack_grad);
    }

    // soft-sharing pull between the involved stacks
    if (lambda != 0.0) {
        std::vector<std::pair<Task, Task>> pairs;
        if (phase == Phase::PRETRAIN)
            pairs = {{Task::TVP, Task::TTP}, {Task::TVP, Task::SC}, {Task::TTP, Task::SC}};
        else
            pairs = {{Task::TVP, Task::SC}};
        for (auto [ta, tb] : pairs) {
            auto refs_a = tensor_refs(params.stack(ta));
            auto refs_b = tensor_refs(params.stack(tb));
            auto grads_a = tensor_refs(grads.stack(ta));
            auto grads_b = tensor_refs(grads.stack(tb));
            for (size_t i = 0; i < refs_a.size(); ++i) {
                if (!refs_a[i].coupled) continue;
                for (long k = 0; k < refs_a[i].size(); ++k) {
                    double diff = refs_a[i].data[k] - refs_b[i].data[k];
                    grads_a[i].data[k] += 2.0 * lambda * diff;
                    grads_b[i].data[k] -= 2.0 * lambda * diff;
                }
            }
        }
    }
    return grads;
}

struct TrunkRun::Impl {
    const StackParams& stack;
    const ModelConfig& config;
    RowCache cache;
};

TrunkRun::TrunkRun(const StackParams& stack, const ModelConfig& config, Mat h0)
    : impl_(new Impl{stack, config, {}}) {
    config.validate();
    if (h0.cols() != config.model_dim)
        throw std::invalid_argument("trunk: input width must equal model_dim");
    if (h0.rows() < 1 || h0.rows() > config.max_seq_len)
        throw std::invalid_argument("trunk: invalid sequence length");
    impl_->cache.h0 = std::move(h0);
    trunk_forward(stack, config, impl_->cache);
}

TrunkRun::TrunkRun(TrunkRun&&) noexcept = default;
TrunkRun::~TrunkRun() = default;

const Mat& TrunkRun::activations() const { return impl_->cache.final_out; }

Mat TrunkRun::backward(const Mat& dactivations, StackParams& grads) const {
    return trunk_backward(impl_->stack, impl_->config, impl_->cache, dactivations, grads);
}

Vec next_token_logprobs(const ModelParams& params, const ModelConfig& config,
                        Task task, const std::vector<int>& context) {
    if (context.empty())
        throw std::invalid_argument("next_token_logprobs: empty context");
    check_ids(context, config.vocab_for(task), config.max_seq_len);
    RowCache cache;
    stack_forward(params.stack(task), config, context, cache);
    long last = cache.logits.rows() - 1;
    Eigen::RowVectorXd logits = cache.logits.row(last);
    double mx = logits.maxCoeff();
    double lse = mx + std::log((logits.array() - mx).exp().sum());
    return (logits.array() - lse).transpose();
}

}  // namespace dualfill
