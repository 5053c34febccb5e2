#include <doctest.h>

#include <cmath>
#include <vector>

#include "dualfill/model.hpp"

using namespace dualfill;

namespace {

ModelConfig tiny_config() {
    ModelConfig cfg;
    cfg.layers = 2;
    cfg.model_dim = 8;
    cfg.heads = 2;
    cfg.ff_dim = 16;
    cfg.max_seq_len = 8;
    cfg.value_vocab = 12;
    cfg.type_vocab = 10;
    cfg.share_strength = 0.05;
    return cfg;
}

// ---------------------------------------------------------------------------
// Straight-line scalar reference of the forward pass: plain loops over
// element accesses only, no linear-algebra library on the math path. This is
// the independent route the implementation is checked against.
// ---------------------------------------------------------------------------
using Grid = std::vector<std::vector<double>>;

Grid oracle_forward_logits(const StackParams& s, const ModelConfig& cfg,
                           const std::vector<int>& ids) {
    const int T = static_cast<int>(ids.size());
    const int d = cfg.model_dim;
    const int heads = cfg.heads;
    const int hd = d / heads;
    const int ff = cfg.ff_dim;

    auto layernorm = [d](const Grid& x, const Vec& gain, const Vec& bias) {
        Grid y(x.size(), std::vector<double>(static_cast<size_t>(d)));
        for (size_t t = 0; t < x.size(); ++t) {
            double mean = 0.0;
            for (int j = 0; j < d; ++j) mean += x[t][static_cast<size_t>(j)];
            mean /= d;
            double var = 0.0;
            for (int j = 0; j < d; ++j) {
                double c = x[t][static_cast<size_t>(j)] - mean;
                var += c * c;
            }
            var /= d;
            double inv = 1.0 / std::sqrt(var + 1e-5);
            for (int j = 0; j < d; ++j)
                y[t][static_cast<size_t>(j)] =
                    (x[t][static_cast<size_t>(j)] - mean) * inv * gain(j) + bias(j);
        }
        return y;
    };

    Grid h(static_cast<size_t>(T), std::vector<double>(static_cast<size_t>(d)));
    for (int t = 0; t < T; ++t)
        for (int j = 0; j < d; ++j)
            h[t][j] = s.token_embedding(ids[static_cast<size_t>(t)], j) +
                      s.position_embedding(t, j);

    for (const auto& b : s.blocks) {
        Grid x1 = layernorm(h, b.ln1.gain, b.ln1.bias);
        Grid q(T, std::vector<double>(d)), k = q, v = q;
        for (int t = 0; t < T; ++t)
            for (int j = 0; j < d; ++j) {
                double sq = b.attn.bq(j), sk = b.attn.bk(j), sv = b.attn.bv(j);
                for (int i = 0; i < d; ++i) {
                    sq += x1[t][i] * b.attn.wq(i, j);
                    sk += x1[t][i] * b.attn.wk(i, j);
                    sv += x1[t][i] * b.attn.wv(i, j);
                }
                q[t][j] = sq;
                k[t][j] = sk;
                v[t][j] = sv;
            }
        Grid concat(T, std::vector<double>(d));
        double scale = 1.0 / std::sqrt(static_cast<double>(hd));
        for (int head = 0; head < heads; ++head) {
            int off = head * hd;
            for (int i = 0; i < T; ++i) {
                // causal attention over positions 0..i
                std::vector<double> score(static_cast<size_t>(i) + 1);
                double mx = -1e300;
                for (int j = 0; j <= i; ++j) {
                    double sdot = 0.0;
                    for (int c = 0; c < hd; ++c) sdot += q[i][off + c] * k[j][off + c];
                    score[j] = sdot * scale;
                    mx = std::max(mx, score[j]);
                }
                double denom = 0.0;
                for (int j = 0; j <= i; ++j) {
                    score[j] = std::exp(score[j] - mx);
                    denom += score[j];
                }
                for (int c = 0; c < hd; ++c) {
                    double acc = 0.0;
                    for (int j = 0; j <= i; ++j) acc += score[j] / denom * v[j][off + c];
                    concat[i][off + c] = acc;
                }
            }
        }
        for (int t = 0; t < T; ++t)
            for (int j = 0; j < d; ++j) {
                double acc = b.attn.bo(j);
                for (int i = 0; i < d; ++i) acc += concat[t][i] * b.attn.wo(i, j);
                h[t][j] += acc;
            }

        Grid x2 = layernorm(h, b.ln2.gain, b.ln2.bias);
        for (int t = 0; t < T; ++t)
            for (int j = 0; j < d; ++j) {
                double acc = b.mlp.b2(j);
                for (int m = 0; m < ff; ++m) {
                    double pre = b.mlp.b1(m);
                    for (int i = 0; i < d; ++i) pre += x2[t][i] * b.mlp.w1(i, m);
                    double act = 0.5 * pre * (1.0 + std::erf(pre / std::sqrt(2.0)));
                    acc += act * b.mlp.w2(m, j);
                }
                h[t][j] += acc;
            }
    }

    Grid hf = layernorm(h, s.final_norm.gain, s.final_norm.bias);
    const int vocab = static_cast<int>(s.token_embedding.rows());
    Grid logits(static_cast<size_t>(T), std::vector<double>(static_cast<size_t>(vocab)));
    for (int t = 0; t < T; ++t)
        for (int vtok = 0; vtok < vocab; ++vtok) {
            double acc = 0.0;
            for (int j = 0; j < d; ++j) acc += hf[t][j] * s.token_embedding(vtok, j);
            logits[t][vtok] = acc;
        }
    return logits;
}

}  // namespace

TEST_CASE("forward logits match the scalar reference route") {
    auto cfg = tiny_config();
    auto params = init_params(cfg, 42);
    Batch batch;
    batch.task = Task::TVP;
    batch.context = {{3, 1, 7, 0, 9}};
    batch.targets = {{1, 7, 0, 9, 2}};

    auto logits = forward_logits(params, cfg, batch);
    auto oracle = oracle_forward_logits(params.tvp, cfg, batch.context[0]);
    REQUIRE(logits.size() == 1);
    REQUIRE(logits[0].rows() == 5);
    for (long t = 0; t < logits[0].rows(); ++t)
        for (long v = 0; v < logits[0].cols(); ++v)
            CHECK(logits[0](t, v) ==
                  doctest::Approx(oracle[static_cast<size_t>(t)][static_cast<size_t>(v)])
                      .epsilon(1e-10));
}

TEST_CASE("output rows are probability distributions") {
    auto cfg = tiny_config();
    auto params = init_params(cfg, 1);
    Batch batch;
    batch.task = Task::TTP;
    batch.context = {{0, 4, 2, 8}, {5, 5, 5, 5}};
    batch.targets = {{4, 2, 8, 1}, {5, 5, 5, 5}};
    for (const auto& probs : forward(params, cfg, batch))
        for (long t = 0; t < probs.rows(); ++t) {
            CHECK(probs.row(t).minCoeff() >= 0.0);
            CHECK(std::abs(probs.row(t).sum() - 1.0) < 1e-6);
        }
}

TEST_CASE("causality: future permutations leave earlier positions unchanged") {
    auto cfg = tiny_config();
    auto params = init_params(cfg, 5);
    Batch a, b;
    a.task = b.task = Task::TVP;
    a.context = {{2, 4, 6, 8, 10}};
    a.targets = {{4, 6, 8, 10, 1}};
    b = a;
    std::swap(b.context[0][3], b.context[0][4]);  // permute two future tokens
    auto pa = forward(params, cfg, a);
    auto pb = forward(params, cfg, b);
    for (long t = 0; t < 3; ++t)
        for (long v = 0; v < pa[0].cols(); ++v)
            CHECK(pa[0](t, v) == doctest::Approx(pb[0](t, v)).epsilon(1e-14));
}

TEST_CASE("id and length validation") {
    auto cfg = tiny_config();
    auto params = init_params(cfg, 2);
    Batch batch;
    batch.task = Task::TVP;
    batch.context = {{0, 99}};
    batch.targets = {{99, 1}};
    CHECK_THROWS_AS(forward(params, cfg, batch), std::out_of_range);
    batch.context = {{0, 1, 2, 3, 4, 5, 6, 7, 0}};  // max_seq_len is 8
    batch.targets = batch.context;
    CHECK_THROWS_AS(forward(params, cfg, batch), std::invalid_argument);
}

TEST_CASE("task_loss analytic cases") {
    SUBCASE("uniform distribution costs ln V") {
        const int V = 7;
        std::vector<Mat> probs{Mat::Constant(3, V, 1.0 / V)};
        double loss = task_loss(probs, {{0, 3, 6}});
        CHECK(loss == doctest::Approx(std::log(static_cast<double>(V))));
    }
    SUBCASE("one-hot correct prediction costs zero") {
        Mat p = Mat::Zero(2, 4);
        p(0, 1) = 1.0;
        p(1, 2) = 1.0;
        CHECK(task_loss({p}, {{1, 2}}) == doctest::Approx(0.0));
    }
    SUBCASE("hand-computed small case") {
        Mat p(2, 3);
        p << 0.7, 0.2, 0.1, 0.25, 0.25, 0.5;
        double expected = -(std::log(0.7) + std::log(0.5)) / 2.0;
        CHECK(task_loss({p}, {{0, 2}}) == doctest::Approx(expected).epsilon(1e-12));
    }
    SUBCASE("masked positions are excluded") {
        Mat p(2, 3);
        p << 0.7, 0.2, 0.1, 0.25, 0.25, 0.5;
        CHECK(task_loss({p}, {{0, -1}}) ==
              doctest::Approx(-std::log(0.7)).epsilon(1e-12));
    }
}

TEST_CASE("joint_loss follows the min composition exactly") {
    // pretraining: |min| over all three tasks
    CHECK(joint_loss(0.9, 1.4, 2.2, Phase::PRETRAIN) == doctest::Approx(0.9));
    // fine-tuning ignores the type task
    CHECK(joint_loss(2.0, 0.5, 3.0, Phase::FINETUNE) == doctest::Approx(2.0));
    // degenerate tie
    CHECK(joint_loss(1.3, 1.3, 1.3, Phase::PRETRAIN) == doctest::Approx(1.3));
    // absolute value applies to the selected minimum
    CHECK(joint_loss(-0.25, 1.0, 2.0, Phase::PRETRAIN) == doctest::Approx(0.25));
    auto report = joint_loss_report(0.9, 0.2, 2.2, Phase::PRETRAIN);
    CHECK(report.argmin == Task::TTP);
    CHECK(report.sum == doctest::Approx(3.3));
    auto ft = joint_loss_report(2.0, 0.5, 3.0, Phase::FINETUNE);
    CHECK(ft.argmin == Task::TVP);
    CHECK(ft.sum == doctest::Approx(5.0));
}

TEST_CASE("sharing_penalty definition and symmetry") {
    auto cfg = tiny_config();
    SUBCASE("identical stacks give zero") {
        auto params = init_params(cfg, 3);
        params.ttp.blocks = params.tvp.blocks;
        params.sc.blocks = params.tvp.blocks;
        CHECK(sharing_penalty(params, 0.5) == doctest::Approx(0.0));
    }
    SUBCASE("zero lambda gives zero") {
        auto params = init_params(cfg, 3);
        CHECK(sharing_penalty(params, 0.0) == doctest::Approx(0.0));
    }
    SUBCASE("two-element difference of (1,1) with lambda 0.5 costs 1.0 per pair") {
        auto params = init_params(cfg, 3);
        params.ttp.blocks = params.tvp.blocks;
        params.sc.blocks = params.tvp.blocks;
        // perturb exactly two coordinates of one coupled tensor by +1;
        // exactly two of the three pairs now carry the (1,1) difference
        params.sc.blocks[0].attn.bq(0) += 1.0;
        params.sc.blocks[0].attn.bq(1) += 1.0;
        const double per_pair = 0.5 * (1.0 + 1.0);  // lambda * ||(1,1)||^2
        CHECK(per_pair == doctest::Approx(1.0));
        CHECK(sharing_penalty(params, 0.5) == doctest::Approx(2 * per_pair));
    }
    SUBCASE("symmetric in the stacks") {
        auto a = init_params(cfg, 9);
        auto b = a;
        std::swap(b.tvp.blocks, b.sc.blocks);
        CHECK(sharing_penalty(a, 0.01) == doctest::Approx(sharing_penalty(b, 0.01)));
    }
    SUBCASE("embeddings are not coupled") {
        auto params = init_params(cfg, 3);
        params.ttp.blocks = params.tvp.blocks;
        params.sc.blocks = params.tvp.blocks;
        params.sc.token_embedding.array() += 5.0;
        params.sc.position_embedding.array() += 5.0;
        CHECK(sharing_penalty(params, 0.5) == doctest::Approx(0.0));
    }
}

namespace {

double total_loss(const ModelParams& params, const ModelConfig& cfg, const Batch& batch,
                  double lambda) {
    return task_loss(forward(params, cfg, batch), batch.targets) +
           sharing_penalty(params, lambda);
}

// max relative error between analytic gradients and central differences
double gradient_check(ModelParams& params, const ModelConfig& cfg, const Batch& batch,
                      Phase phase, double lambda, long stride) {
    ModelParams grads = backward(params, cfg, batch, phase, lambda);
    const double eps = 1e-5;
    double worst = 0.0;
    for (Task task : {Task::TVP, Task::TTP, Task::SC}) {
        auto prefs = tensor_refs(params.stack(task));
        auto grefs = tensor_refs(grads.stack(task));
        for (size_t i = 0; i < prefs.size(); ++i) {
            for (long k = 0; k < prefs[i].size(); k += stride) {
                double saved = prefs[i].data[k];
                prefs[i].data[k] = saved + eps;
                double up = total_loss(params, cfg, batch, lambda);
                prefs[i].data[k] = saved - eps;
                double down = total_loss(params, cfg, batch, lambda);
                prefs[i].data[k] = saved;
                double fd = (up - down) / (2.0 * eps);
                double an = grefs[i].data[k];
                double rel = std::abs(fd - an) / std::max(std::abs(fd) + std::abs(an), 1e-6);
                worst = std::max(worst, rel);
            }
        }
    }
    return worst;
}

}  // namespace

TEST_CASE("gradients match central finite differences") {
    ModelConfig cfg = tiny_config();
    cfg.layers = 1;
    auto params = init_params(cfg, 11);
    Batch batch;
    batch.task = Task::TVP;
    batch.context = {{1, 5, 3, 0}, {2, 2, 7, 4}};
    batch.targets = {{5, 3, 0, 8}, {2, 7, 4, -1}};
    // stride keeps the unit run quick; the acceptance suite sweeps every
    // parameter of the larger model
    double worst = gradient_check(params, cfg, batch, Phase::PRETRAIN, 0.05, 7);
    CHECK(worst < 1e-4);
}

TEST_CASE("zero lambda leaves other stacks without gradient") {
    auto cfg = tiny_config();
    auto params = init_params(cfg, 13);
    Batch batch;
    batch.task = Task::TVP;
    batch.context = {{1, 5, 3}};
    batch.targets = {{5, 3, 0}};
    auto grads = backward(params, cfg, batch, Phase::PRETRAIN, 0.0);
    for (Task other : {Task::TTP, Task::SC})
        for (const auto& ref : tensor_refs(grads.stack(other)))
            for (long k = 0; k < ref.size(); ++k) CHECK(ref.data[k] == 0.0);
}

TEST_CASE("summed gradients are linear in batch duplication") {
    auto cfg = tiny_config();
    auto params = init_params(cfg, 17);
    Batch once;
    once.task = Task::SC;
    once.context = {{1, 5, 3}};
    once.targets = {{5, 3, 0}};
    Batch twice = once;
    twice.context.push_back(once.context[0]);
    twice.targets.push_back(once.targets[0]);
    // mean-reduction: duplicating the row leaves the averaged gradient
    // unchanged, so the summed gradient doubles
    auto g1 = backward(params, cfg, once, Phase::PRETRAIN, 0.0);
    auto g2 = backward(params, cfg, twice, Phase::PRETRAIN, 0.0);
    auto r1 = tensor_refs(g1.sc);
    auto r2 = tensor_refs(g2.sc);
    long n1 = 3, n2 = 6;  // unmasked target counts
    for (size_t i = 0; i < r1.size(); ++i)
        for (long k = 0; k < r1[i].size(); k += 11)
            CHECK(r1[i].data[k] * n1 * 2 ==
                  doctest::Approx(r2[i].data[k] * n2).epsilon(1e-9));
}

TEST_CASE("fine-tune backward rejects the type task") {
    auto cfg = tiny_config();
    auto params = init_params(cfg, 19);
    Batch batch;
    batch.task = Task::TTP;
    batch.context = {{1, 2}};
    batch.targets = {{2, 3}};
    CHECK_THROWS_AS(backward(params, cfg, batch, Phase::FINETUNE, 0.0),
                    std::invalid_argument);
}
