#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

#include "hfedf/errors.hpp"
#include "hfedf/experiment.hpp"
#include "hfedf/federation.hpp"
#include "hfedf/metrics.hpp"
#include "helpers.hpp"

using namespace hfedf;

namespace {

EvalSplit tiny_split(std::size_t n_clients, std::size_t per_client, std::uint64_t seed,
                     std::size_t dim = 4, int classes = 3, bool identical_shards = false) {
    EvalSplit split;
    RngStream rng(seed, "tiny-split");
    for (std::size_t i = 0; i < n_clients; ++i) {
        if (identical_shards && i > 0) {
            split.clients.push_back(split.clients.front());
            continue;
        }
        ClientData cd;
        cd.train_x = Matrix(per_client, dim);
        for (double& v : cd.train_x.values()) v = rng.next_normal();
        for (std::size_t r = 0; r < per_client; ++r)
            cd.train_y.push_back(static_cast<int>(rng.next_below(static_cast<std::uint64_t>(classes))));
        cd.val_x = cd.train_x;
        cd.val_y = cd.train_y;
        split.clients.push_back(std::move(cd));
    }
    split.ood_x = split.clients.front().train_x;
    split.ood_y = split.clients.front().train_y;
    return split;
}

double simplex_gap(const std::vector<double>& w) {
    double sum = 0.0;
    for (double v : w) sum += v;
    return std::abs(sum - 1.0);
}

}  // namespace

TEST_CASE("grad_align symmetric cases") {
    // identical gradients: cosines 1, uniform weights
    std::vector<std::vector<double>> same(4, {0.3, -1.2, 0.5});
    auto r = grad_align(same, GradAlignSign::Plain);
    for (double c : r.cosines) CHECK(c == doctest::Approx(1.0).epsilon(1e-12));
    for (double w : r.weights) CHECK(w == doctest::Approx(0.25).epsilon(1e-12));

    // single client
    auto single = grad_align({{1.0, 2.0}}, GradAlignSign::Plain);
    CHECK(single.weights.size() == 1);
    CHECK(single.weights[0] == 1.0);

    // orthogonal pair: both cosines are cos(45 deg)
    auto ortho = grad_align({{1.0, 0.0}, {0.0, 1.0}}, GradAlignSign::Plain);
    CHECK(ortho.cosines[0] == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
    CHECK(ortho.cosines[1] == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
    CHECK(ortho.weights[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("grad_align asymmetric case against a hand-computed oracle") {
    std::vector<std::vector<double>> grads = {{1.0, 0.0}, {1.0, 1.0}};
    // avg = (1, 0.5); cos1 = 1/sqrt(1.25); cos2 = 1.5/(sqrt(1.25)*sqrt(2))
    const double c1 = 1.0 / std::sqrt(1.25);
    const double c2 = 1.5 / (std::sqrt(1.25) * std::sqrt(2.0));
    auto r = grad_align(grads, GradAlignSign::Plain);
    CHECK(r.cosines[0] == doctest::Approx(c1).epsilon(1e-12));
    CHECK(r.cosines[1] == doctest::Approx(c2).epsilon(1e-12));
    const double e1 = std::exp(c1), e2 = std::exp(c2);
    CHECK(r.weights[0] == doctest::Approx(e1 / (e1 + e2)).epsilon(1e-12));
    CHECK(r.weights[1] == doctest::Approx(e2 / (e1 + e2)).epsilon(1e-12));

    auto neg = grad_align(grads, GradAlignSign::Negated);
    const double n1 = std::exp(-c1), n2 = std::exp(-c2);
    CHECK(neg.weights[0] == doctest::Approx(n1 / (n1 + n2)).epsilon(1e-12));
    CHECK(neg.weights[0] > neg.weights[1]);  // negated mode favors the less aligned client
    CHECK(neg.weights[0] > r.weights[0]);
}

TEST_CASE("grad_align simplex, permutation, and scaling properties") {
    RngStream rng(99, "fuzz");
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 1 + rng.next_below(6);
        const std::size_t dim = 1 + rng.next_below(20);
        const double scale = std::pow(10.0, rng.next_uniform(-3.0, 3.0));
        std::vector<std::vector<double>> grads(n, std::vector<double>(dim, 0.0));
        for (auto& g : grads) {
            if (rng.next_double() < 0.08) continue;  // keep some zero gradients
            for (double& v : g) v = scale * rng.next_normal();
        }
        const auto sign = trial % 2 ? GradAlignSign::Plain : GradAlignSign::Negated;
        auto r = grad_align(grads, sign);

        CHECK(simplex_gap(r.weights) < 1e-12);
        for (double w : r.weights) CHECK(w >= 0.0);
        for (double c : r.cosines) {
            CHECK(c >= -1.0);
            CHECK(c <= 1.0);
        }

        // permutation equivariance: rotate the client list by one
        std::vector<std::vector<double>> rotated(grads.begin() + 1, grads.end());
        rotated.push_back(grads.front());
        auto rr = grad_align(rotated, sign);
        for (std::size_t i = 0; i < n; ++i)
            CHECK(rr.weights[i] == doctest::Approx(r.weights[(i + 1) % n]).epsilon(1e-12));

        // joint positive rescaling leaves weights unchanged
        std::vector<std::vector<double>> scaled = grads;
        for (auto& g : scaled)
            for (double& v : g) v *= 7.25;
        auto rs = grad_align(scaled, sign);
        for (std::size_t i = 0; i < n; ++i)
            CHECK(rs.weights[i] == doctest::Approx(r.weights[i]).epsilon(1e-12));
    }

    CHECK_THROWS_AS(grad_align({}, GradAlignSign::Plain), std::invalid_argument);
    CHECK_THROWS_AS(grad_align({{1.0}, {1.0, 2.0}}, GradAlignSign::Plain), std::invalid_argument);
}

TEST_CASE("grad_align on disjoint-support vectors reduces to norm shares") {
    // embedding gradients: each client touches only its own row, so the
    // cosine against the mean collapses to ||g_i|| / sqrt(sum_j ||g_j||^2)
    std::vector<std::vector<double>> sparse = {
        {3.0, 0.0, 0.0, 0.0, 0.0, 0.0},
        {0.0, 0.0, 4.0, 0.0, 0.0, 0.0},
        {0.0, 0.0, 0.0, 0.0, 0.0, 12.0},
    };
    auto r = grad_align(sparse, GradAlignSign::Plain);
    CHECK(r.cosines[0] == doctest::Approx(3.0 / 13.0).epsilon(1e-12));
    CHECK(r.cosines[1] == doctest::Approx(4.0 / 13.0).epsilon(1e-12));
    CHECK(r.cosines[2] == doctest::Approx(12.0 / 13.0).epsilon(1e-12));
    for (double c : r.cosines) CHECK(c >= 0.0);
}

TEST_CASE("ema scalar hand recursion") {
    EmaState st;
    std::vector<double> cur = {1.0};
    ema_apply(cur, st, 0, 0, 0.5);
    CHECK(cur[0] == 1.0);
    CHECK(st.shadow[0] == 1.0);

    cur[0] = 2.0;
    ema_apply(cur, st, 1, 0, 0.5);
    CHECK(cur[0] == 1.5);

    cur[0] = 3.0;
    ema_apply(cur, st, 2, 0, 0.5);
    CHECK(cur[0] == 2.25);
}

TEST_CASE("ema before warmup is a no-op and decay one is the identity") {
    EmaState st;
    std::vector<double> cur = {5.0, -2.0};
    ema_apply(cur, st, 0, 3, 0.5);
    CHECK(!st.initialized);
    CHECK(cur[0] == 5.0);

    // warmup round initializes without changing the current values
    ema_apply(cur, st, 3, 3, 0.5);
    CHECK(st.initialized);
    CHECK(cur[0] == 5.0);

    EmaState id_st;
    std::vector<double> v = {1.0, 2.0};
    ema_apply(v, id_st, 0, 0, 1.0);
    v = {7.0, -1.0};
    ema_apply(v, id_st, 1, 0, 1.0);
    CHECK(v[0] == 7.0);
    CHECK(v[1] == -1.0);

    EmaState bad;
    std::vector<double> w = {1.0};
    CHECK_THROWS_AS(ema_apply(w, bad, 2, 1, 0.5), std::logic_error);
}

TEST_CASE("client_update with zero learning rate returns the same parameters") {
    ClientModel model(4, {6}, 3);
    RngStream init(1, "init");
    ParamVector p = model.init_params(init);
    EvalSplit split = tiny_split(1, 12, 2);
    RngStream stream(3, "client");
    auto fit = client_update(model, p, split.clients[0].train_x, split.clients[0].train_y,
                             {2, 4, 0.0, 0.0}, stream);
    CHECK(fit.params == p);
}

TEST_CASE("client_update decreases the loss on a separable full-batch problem") {
    ClientModel model(2, {}, 2);
    Matrix x = Matrix::from_rows({{1.0, 0.1}, {0.9, -0.2}, {-1.1, 0.3}, {-0.8, 0.0}});
    std::vector<int> y = {0, 0, 1, 1};
    RngStream init(4, "init");
    ParamVector p = model.init_params(init);

    RngStream stream(5, "client");
    double prev = model.backward(p, x, y).loss;
    for (int step = 0; step < 5; ++step) {
        p = client_update(model, p, x, y, {1, 4, 0.5, 0.0}, stream).params;
        const double now = model.backward(p, x, y).loss;
        CHECK(now < prev);
        prev = now;
    }
}

TEST_CASE("client_update weight decay shrinks parameters by the closed-form factor") {
    // saturated correct predictions make the cross-entropy gradient vanish,
    // leaving only the decay term: one step multiplies by (1 - lr*wd)
    ClientModel model(2, {}, 2);
    auto mats = ParamVector::zeros(model.layout()).to_matrices();
    mats[0] = Matrix::from_rows({{40.0, -40.0}, {-40.0, 40.0}});
    ParamVector p = ParamVector::from_matrices(model.layout(), mats);
    Matrix x = Matrix::from_rows({{1.0, 0.0}, {0.0, 1.0}});
    std::vector<int> y = {0, 1};

    const double lr = 0.1, wd = 0.05;
    RngStream stream(6, "client");
    auto fit = client_update(model, p, x, y, {1, 2, lr, wd}, stream);
    for (std::size_t i = 0; i < p.values.size(); ++i)
        CHECK(fit.params.values[i] == doctest::Approx((1.0 - lr * wd) * p.values[i]).epsilon(1e-12));
}

TEST_CASE("client_update rejects an empty shard") {
    ClientModel model(2, {}, 2);
    ParamVector p = ParamVector::zeros(model.layout());
    RngStream stream(7, "client");
    Matrix empty(0, 2);
    CHECK_THROWS_AS(client_update(model, p, empty, {}, {1, 2, 0.1, 0.0}, stream), ConfigError);
}

TEST_CASE("fedavg identical clients equal the single-client result") {
    ClientModel model(4, {5}, 3);
    RngStream init(8, "init");
    ParamVector global = model.init_params(init);
    EvalSplit split = tiny_split(3, 15, 9, 4, 3, /*identical_shards=*/true);

    std::vector<RngStream> streams{{10, "c"}, {10, "c"}, {10, "c"}};
    ParamVector avg = fedavg_round(model, {global, global, global}, split, {1, 8, 0.2, 0.0}, streams);

    RngStream one(10, "c");
    ParamVector direct =
        client_update(model, global, split.clients[0].train_x, split.clients[0].train_y, {1, 8, 0.2, 0.0}, one)
            .params;
    CHECK(hfedf::test::max_rel_dev(avg.values, direct.values) < 1e-12);
}

TEST_CASE("fedavg with one client reduces to plain local training") {
    ClientModel model(4, {5}, 3);
    RngStream init(11, "init");
    ParamVector global = model.init_params(init);
    EvalSplit split = tiny_split(1, 20, 12);
    std::vector<RngStream> streams{{13, "c"}};
    ParamVector avg = fedavg_round(model, {global}, split, {2, 8, 0.1, 1e-3}, streams);

    RngStream one(13, "c");
    ParamVector direct =
        client_update(model, global, split.clients[0].train_x, split.clients[0].train_y, {2, 8, 0.1, 1e-3}, one)
            .params;
    CHECK(avg.values == direct.values);
}

TEST_CASE("fedavg with zero local epochs averages the incoming parameters") {
    ClientModel model(1, {}, 1);
    ParamVector a = ParamVector::zeros(model.layout());
    ParamVector b = ParamVector::zeros(model.layout());
    for (double& v : b.values) v = 2.0;

    EvalSplit split = tiny_split(2, 5, 14, 1, 1);
    std::vector<RngStream> streams{{1, "x"}, {1, "y"}};
    ParamVector avg = fedavg_round(model, {a, b}, split, {0, 4, 0.1, 0.0}, streams);
    for (double v : avg.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-15));

    ParamVector bad{{{"other", 1, 1}}, {0.0}};
    CHECK_THROWS_AS(fedavg_round(model, {a, bad}, split, {0, 4, 0.1, 0.0}, streams), std::invalid_argument);
}

TEST_CASE("fedprox with zero coefficient matches fedavg bit-exactly") {
    ClientModel model(4, {6}, 3);
    RngStream init(15, "init");
    ParamVector global = model.init_params(init);
    EvalSplit split = tiny_split(3, 18, 16);

    std::vector<RngStream> s1{{17, "c0"}, {17, "c1"}, {17, "c2"}};
    std::vector<RngStream> s2{{17, "c0"}, {17, "c1"}, {17, "c2"}};
    ClientOpts opts{2, 8, 0.05, 1e-3};
    ParamVector avg = fedavg_round(model, {global, global, global}, split, opts, s1);
    ParamVector prox = fedprox_round(model, {global, global, global}, split, opts, 0.0, s2);
    CHECK(avg.values == prox.values);  // bit-exact
}

TEST_CASE("fedprox with a huge coefficient pins clients to the broadcast") {
    ClientModel model(4, {6}, 3);
    RngStream init(18, "init");
    ParamVector global = model.init_params(init);
    EvalSplit split = tiny_split(2, 16, 19);
    std::vector<RngStream> streams{{20, "c0"}, {20, "c1"}};

    // one full-batch step with rho 1e3 and a small lr barely moves parameters
    ParamVector out = fedprox_round(model, {global, global}, split, {1, 16, 1e-3, 0.0}, 1e3, streams);
    double drift = 0.0;
    for (std::size_t i = 0; i < out.values.size(); ++i)
        drift = std::max(drift, std::abs(out.values[i] - global.values[i]));
    CHECK(drift < 1e-2);
}

TEST_CASE("fedprox gradient matches finite differences of the penalized loss") {
    ClientModel model(3, {4}, 2);
    RngStream init(21, "init");
    ParamVector p = model.init_params(init);
    ParamVector anchor = model.init_params(init);
    EvalSplit split = tiny_split(1, 10, 22, 3, 2);
    const Matrix& x = split.clients[0].train_x;
    const std::vector<int>& y = split.clients[0].train_y;

    const double rho = 0.7, lr = 1e-3;
    RngStream stream(23, "c");
    ParamVector stepped =
        client_update_prox(model, p, x, y, {1, 16, lr, 0.0}, anchor, rho, stream).params;

    auto penalized = [&](const ParamVector& q) {
        double pen = 0.0;
        for (std::size_t i = 0; i < q.values.size(); ++i) {
            const double d = q.values[i] - anchor.values[i];
            pen += d * d;
        }
        return cross_entropy(model.forward(q, x), y).loss + 0.5 * rho * pen;
    };
    for (std::size_t i = 0; i < p.values.size(); ++i) {
        const double implied = (p.values[i] - stepped.values[i]) / lr;
        const double h = 1e-6;
        ParamVector up = p, down = p;
        up.values[i] += h;
        down.values[i] -= h;
        const double fd = (penalized(up) - penalized(down)) / (2 * h);
        if (std::abs(fd) > 1e-6 || std::abs(implied) > 1e-6)
            CHECK(hfedf::test::rel_err(implied, fd, 1e-4) < 1e-5);
    }
}

TEST_CASE("hfedf_round with zero server lr leaves the hypernetwork unchanged") {
    ClientModel model(4, {6}, 3);
    HFedFConfig cfg;
    cfg.local_epochs = 1;
    cfg.batch_size = 8;
    cfg.ema_enabled = false;
    FederationState state = make_federation(model, 3, cfg, 30, "z");
    state.config.server_lr = 0.0;
    state.config.server_weight_decay = 0.0;

    auto theta_before = state.hypernet.theta_flat();
    auto nu_before = state.hypernet.embeddings().values();
    EvalSplit split = tiny_split(3, 12, 31);
    RoundTrace trace = hfedf_round(state, split);

    CHECK(state.hypernet.theta_flat() == theta_before);
    CHECK(state.hypernet.embeddings().values() == nu_before);
    CHECK(trace.theta_weights.size() == 3);
    CHECK(trace.client_losses.size() == 3);
    CHECK(simplex_gap(trace.theta_weights) < 1e-12);
    CHECK(simplex_gap(trace.nu_weights) < 1e-12);
    CHECK(state.round == 1);
}

TEST_CASE("hfedf_round symmetric clients get uniform weights and a shared update") {
    ClientModel model(4, {6}, 3);
    HFedFConfig cfg;
    cfg.local_epochs = 1;
    cfg.batch_size = 8;
    cfg.ema_enabled = false;
    cfg.server_weight_decay = 0.0;
    FederationState state = make_federation(model, 3, cfg, 32, "s");

    // same embedding row, same shard, same stream for every client
    for (std::size_t i = 1; i < 3; ++i)
        for (std::size_t k = 0; k < state.hypernet.embedding_dim(); ++k)
            state.hypernet.embeddings()(i, k) = state.hypernet.embeddings()(0, k);
    state.client_streams.assign(3, RngStream(33, "shared"));
    EvalSplit split = tiny_split(3, 12, 34, 4, 3, /*identical_shards=*/true);

    auto theta_before = state.hypernet.theta_flat();

    // reproduce a single client's pseudo-gradient before running the round
    FederationState probe = state;
    ParamVector phi0 = probe.hypernet.generate(0);
    RngStream stream(33, "shared");
    LocalFit fit = client_update(model, phi0, split.clients[0].train_x, split.clients[0].train_y,
                                 {1, 8, cfg.client_lr, cfg.client_weight_decay}, stream);
    std::vector<double> seed(phi0.values.size());
    for (std::size_t k = 0; k < seed.size(); ++k) seed[k] = phi0.values[k] - fit.params.values[k];
    GradPair single = probe.hypernet.vjp(0, seed);

    RoundTrace trace = hfedf_round(state, split);
    for (double w : trace.theta_weights) CHECK(w == doctest::Approx(1.0 / 3).epsilon(1e-12));
    for (double c : trace.theta_cosines) CHECK(c == doctest::Approx(1.0).epsilon(1e-12));
    // equal-norm disjoint embedding gradients: every nu cosine is 1/sqrt(3)
    for (double c : trace.nu_cosines) CHECK(c == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-9));
    for (double w : trace.nu_weights) CHECK(w == doctest::Approx(1.0 / 3).epsilon(1e-9));

    // aggregate step equals the single-client vjp step
    auto theta_after = state.hypernet.theta_flat();
    for (std::size_t i = 0; i < theta_after.size(); ++i) {
        const double expect = theta_before[i] - cfg.server_lr * single.g_theta[i];
        CHECK(theta_after[i] == doctest::Approx(expect).epsilon(1e-9));
    }
}

TEST_CASE("hfedf with one client reduces to direct composite training") {
    ClientModel model(4, {8}, 3);
    HFedFConfig cfg;
    cfg.local_epochs = 2;
    cfg.batch_size = 8;
    cfg.server_lr = 0.05;
    cfg.server_weight_decay = 1e-4;
    cfg.client_weight_decay = 1e-3;
    cfg.ema_decay = 0.9;
    cfg.ema_warmup = 2;

    EvalSplit split = tiny_split(1, 24, 40);
    FederationState state = make_federation(model, 1, cfg, 41, "r");

    // oracle: the same maths written as a plain single-model training loop
    FederationState mirror = make_federation(model, 1, cfg, 41, "r");
    Hypernetwork hn = mirror.hypernet;
    RngStream stream(41, "r/client-0");
    std::vector<double> theta_shadow, nu_shadow;
    bool shadow_ready = false;

    const int rounds = 20;
    for (int t = 0; t < rounds; ++t) {
        RoundTrace trace = hfedf_round(state, split);
        CHECK(trace.theta_weights == std::vector<double>{1.0});

        ParamVector phi0 = hn.generate(0);
        LocalFit fit = client_update(model, phi0, split.clients[0].train_x, split.clients[0].train_y,
                                     {cfg.local_epochs, cfg.batch_size, cfg.client_lr, cfg.client_weight_decay},
                                     stream);
        std::vector<double> seed(phi0.values.size());
        for (std::size_t k = 0; k < seed.size(); ++k) seed[k] = phi0.values[k] - fit.params.values[k];
        GradPair gp = hn.vjp(0, seed);

        std::vector<double> theta = hn.theta_flat();
        std::vector<double> agg(theta.size(), 0.0);
        add_scaled(agg, gp.g_theta, 1.0);
        add_scaled(agg, theta, cfg.server_weight_decay);
        add_scaled(theta, agg, -cfg.server_lr);
        hn.set_theta_flat(theta);

        auto& nu = hn.embeddings().values();
        std::vector<double> nu_agg(nu.size(), 0.0);
        for (std::size_t k = 0; k < nu.size(); ++k) nu_agg[k] = 1.0 * gp.g_nu_row[k];
        add_scaled(nu_agg, nu, cfg.server_weight_decay);
        add_scaled(nu, nu_agg, -cfg.server_lr);

        // hand-inlined exponential smoothing, warmup then blend
        std::vector<double> cur = hn.theta_flat();
        if (t == cfg.ema_warmup) {
            theta_shadow = cur;
            nu_shadow = nu;
            shadow_ready = true;
        } else if (t > cfg.ema_warmup && shadow_ready) {
            for (std::size_t k = 0; k < cur.size(); ++k) {
                theta_shadow[k] = cfg.ema_decay * cur[k] + (1 - cfg.ema_decay) * theta_shadow[k];
                cur[k] = theta_shadow[k];
            }
            for (std::size_t k = 0; k < nu.size(); ++k) {
                nu_shadow[k] = cfg.ema_decay * nu[k] + (1 - cfg.ema_decay) * nu_shadow[k];
                nu[k] = nu_shadow[k];
            }
            hn.set_theta_flat(cur);
        }
    }

    CHECK(hfedf::test::max_rel_dev(state.hypernet.theta_flat(), hn.theta_flat()) <= 1e-12);
    CHECK(hfedf::test::max_rel_dev(state.hypernet.embeddings().values(), hn.embeddings().values()) <= 1e-12);
}

TEST_CASE("checkpointing resumes a run bit-exactly") {
    ClientModel model(4, {6}, 3);
    HFedFConfig cfg;
    cfg.local_epochs = 1;
    cfg.batch_size = 8;
    cfg.server_optimizer = ServerOptimizer::Adam;
    cfg.embedding_mode = EmbeddingMode::RandomizedEachRound;
    EvalSplit split = tiny_split(2, 14, 50);

    FederationState a = make_federation(model, 2, cfg, 51, "ck");
    for (int t = 0; t < 3; ++t) hfedf_round(a, split);

    const auto path = std::filesystem::temp_directory_path() / "hfedf_ckpt_test.json";
    save_checkpoint(a, path);
    FederationState b = load_checkpoint(path);
    std::filesystem::remove(path);

    CHECK(b.round == 3);
    for (int t = 0; t < 3; ++t) {
        hfedf_round(a, split);
        hfedf_round(b, split);
    }
    CHECK(a.hypernet.theta_flat() == b.hypernet.theta_flat());
    CHECK(a.hypernet.embeddings().values() == b.hypernet.embeddings().values());
    CHECK(a.round == b.round);
}

TEST_CASE("randomized embeddings are redrawn every round, deterministically") {
    ClientModel model(4, {6}, 3);
    HFedFConfig cfg;
    cfg.local_epochs = 1;
    cfg.batch_size = 8;
    cfg.embedding_mode = EmbeddingMode::RandomizedEachRound;
    EvalSplit split = tiny_split(2, 10, 60);

    FederationState a = make_federation(model, 2, cfg, 61, "re");
    FederationState b = make_federation(model, 2, cfg, 61, "re");
    auto before = a.hypernet.embeddings().values();
    hfedf_round(a, split);
    hfedf_round(b, split);
    CHECK(a.hypernet.embeddings().values() != before);
    CHECK(a.hypernet.embeddings().values() == b.hypernet.embeddings().values());
}

TEST_CASE("ema disabled or distant warmup leaves no shadow") {
    ClientModel model(4, {6}, 3);
    HFedFConfig cfg;
    cfg.local_epochs = 1;
    cfg.batch_size = 8;
    cfg.ema_warmup = 1000;
    EvalSplit split = tiny_split(2, 10, 70);
    FederationState state = make_federation(model, 2, cfg, 71, "w");
    for (int t = 0; t < 4; ++t) hfedf_round(state, split);
    CHECK(!state.ema_theta.initialized);
    CHECK(!state.ema_nu.initialized);
}
