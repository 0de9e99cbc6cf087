#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "fixtures.hpp"
#include "mfgsim/comm.hpp"

using namespace mfgsim;
using fixtures::scalar;
using fixtures::scalar_vec;

namespace {

SchedulerParams sched(double alpha) {
    SchedulerParams sp;
    sp.S = scalar(1.0);
    sp.alpha = alpha;
    return sp;
}

}  // namespace

TEST_CASE("predict: affine one-step prediction") {
    LinkState ls;
    ls.Y_prev = scalar_vec(0.0);
    ls.U_prev = scalar_vec(0.0);
    CHECK(predict(ls, scalar(0.5), scalar(1.0))[0] == 0.0);

    ls.Y_prev = scalar_vec(1.0);
    ls.U_prev = scalar_vec(-0.056920);
    CHECK(predict(ls, scalar(0.5), scalar(1.0))[0] == doctest::Approx(0.443080).epsilon(1e-12));

    ls.Y_prev = scalar_vec(0.77);
    CHECK(predict(ls, scalar(1.0), scalar(0.0))[0] == 0.77);  // pure hold
}

TEST_CASE("schedule: threshold with a forced first instant") {
    CHECK_FALSE(schedule(scalar_vec(0.0), sched(2.0), 5));
    CHECK(schedule(scalar_vec(0.17), sched(0.0), 3));  // alpha = 0 always fires
    CHECK(schedule(scalar_vec(0.0), sched(100.0), 0)); // k = 0 forced
    CHECK(schedule(scalar_vec(1.5), sched(2.0), 1));   // 2.25 >= 2
    CHECK_FALSE(schedule(scalar_vec(1.4), sched(2.0), 1));  // 1.96 < 2
}

TEST_CASE("encode: innovation identity") {
    CHECK(encode(scalar_vec(1.2), scalar_vec(1.0))[0] == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(encode(scalar_vec(0.4), scalar_vec(0.4))[0] == 0.0);
    const Vector x = (Vector(2) << 1.0, -1.0).finished();
    const Vector c = encode(x, Vector::Zero(2));
    CHECK(c[0] == 1.0);
    CHECK(c[1] == -1.0);
}

TEST_CASE("channel: noiseless passthrough and seeded determinism") {
    const GaussianStream zero(stream_key(3, 0, StreamKind::channel_noise), scalar(0.0));
    CHECK(channel_transmit(scalar_vec(0.7), zero, 5)[0] == 0.7);

    const GaussianStream s1(stream_key(3, 1, StreamKind::channel_noise), scalar(0.04));
    const GaussianStream s2(stream_key(3, 1, StreamKind::channel_noise), scalar(0.04));
    for (int k = 0; k < 20; ++k) {
        CHECK(channel_transmit(scalar_vec(0.0), s1, k)[0] ==
              channel_transmit(scalar_vec(0.0), s2, k)[0]);
    }
}

TEST_CASE("channel: additive noise moments") {
    const GaussianStream s(stream_key(11, 0, StreamKind::channel_noise), scalar(0.04));
    const int n = 100000;
    double sum = 0.0;
    double sum2 = 0.0;
    for (int k = 0; k < n; ++k) {
        const double v = channel_transmit(scalar_vec(0.0), s, k)[0];
        sum += v;
        sum2 += v * v;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    CHECK(std::abs(mean) <= 3.0 * 0.2 / std::sqrt(static_cast<double>(n)));
    CHECK(var == doctest::Approx(0.04).epsilon(0.05));
}

TEST_CASE("decode: hold between transmissions, exact recovery on a clean channel") {
    const Vector yhat = scalar_vec(0.3);
    const Matrix P = scalar(0.1);

    const DecodeResult hold = decode(yhat, false, nullptr, P, scalar(0.04));
    CHECK(hold.Y[0] == 0.3);
    CHECK(hold.P(0, 0) == 0.1);

    // perfect channel: gain is the identity on the range of P
    const Vector d = scalar_vec(0.25);  // the true innovation
    const DecodeResult clean = decode(yhat, true, &d, P, scalar(0.0));
    CHECK(clean.Y[0] == doctest::Approx(0.55).epsilon(1e-12));
    CHECK(clean.P(0, 0) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("decode: scalar gain P/(P+sigma_v)") {
    const Matrix G = decode_gain(scalar(0.25), scalar(0.04));
    CHECK(G(0, 0) == doctest::Approx(0.25 / 0.29).epsilon(1e-12));
    CHECK(G(0, 0) == doctest::Approx(0.862069).epsilon(1e-6));

    // degenerate prior: no update at all
    CHECK(decode_gain(scalar(0.0), scalar(0.0))(0, 0) == 0.0);
}

TEST_CASE("decode_gain: matrix case matches the solve") {
    Matrix P(2, 2);
    P << 0.3, 0.05, 0.05, 0.2;
    Matrix Sv(2, 2);
    Sv << 0.04, 0.0, 0.0, 0.09;
    const Matrix G = decode_gain(P, Sv);
    const Matrix expect = P * (P + Sv).inverse();
    CHECK((G - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("propagate_covariance: direct evaluations") {
    CHECK(propagate_covariance(scalar(0.25), scalar(0.5), scalar(0.01))(0, 0) ==
          doctest::Approx(0.0725).epsilon(1e-15));
    CHECK(propagate_covariance(scalar(0.4), scalar(0.0), scalar(0.02))(0, 0) ==
          doctest::Approx(0.02).epsilon(1e-15));
    CHECK(propagate_covariance(scalar(0.4), scalar(1.0), scalar(0.0))(0, 0) ==
          doctest::Approx(0.4).epsilon(1e-15));
}

TEST_CASE("pipeline: error and transmission traces are control-independent, exactly") {
    const GameConfig cfg = fixtures::modela_config();
    const auto& tp = cfg.distribution.types[0];
    const int T = 300;

    const auto run_with_controls = [&](double gain) {
        CommLink link(tp, cfg.scheduler, cfg.noise, DecoderInit::prior_mean);
        const GaussianStream w(stream_key(42, 0, StreamKind::process_noise), cfg.noise.sigma_w);
        const GaussianStream v(stream_key(42, 0, StreamKind::channel_noise), cfg.noise.sigma_v);
        const GaussianStream x0(stream_key(42, 0, StreamKind::initial_state), cfg.noise.sigma_x);
        Vector X = tp.nu0 + x0.vector_at(0);
        Vector W_prev = Vector::Zero(1);
        std::vector<double> errs;
        std::vector<int> gammas;
        for (int k = 0; k < T; ++k) {
            const StepRecord& rec = link.step(X, W_prev, v);
            errs.push_back(rec.err[0]);
            gammas.push_back(rec.gamma ? 1 : 0);
            const Vector U = scalar_vec(gain * std::sin(0.3 * k) * rec.Y[0]);
            link.note_control(U);
            const Vector W = w.vector_at(static_cast<std::uint64_t>(k));
            X = tp.A * X + tp.B * U + W;
            W_prev = W;
        }
        return std::pair(errs, gammas);
    };

    const auto [e0, g0] = run_with_controls(0.0);
    const auto [e1, g1] = run_with_controls(0.8);
    const auto [e2, g2] = run_with_controls(-2.4);
    CHECK(g0 == g1);
    CHECK(g0 == g2);
    for (int k = 0; k < T; ++k) {
        CHECK(e0[static_cast<std::size_t>(k)] == e1[static_cast<std::size_t>(k)]);
        CHECK(e0[static_cast<std::size_t>(k)] == e2[static_cast<std::size_t>(k)]);
    }
}

TEST_CASE("pipeline: relative error has zero mean at every step") {
    const GameConfig cfg = fixtures::modela_config();
    const auto& tp = cfg.distribution.types[0];
    const int runs = 10000;
    const int T = 200;
    std::vector<double> sum(T, 0.0);
    std::vector<double> sum2(T, 0.0);

    for (int r = 0; r < runs; ++r) {
        CommLink link(tp, cfg.scheduler, cfg.noise, DecoderInit::prior_mean);
        const auto uid = static_cast<std::uint64_t>(r);
        const GaussianStream w(stream_key(777, uid, StreamKind::process_noise), cfg.noise.sigma_w);
        const GaussianStream v(stream_key(777, uid, StreamKind::channel_noise), cfg.noise.sigma_v);
        const GaussianStream x0(stream_key(777, uid, StreamKind::initial_state),
                                cfg.noise.sigma_x);
        Vector X = tp.nu0 + x0.vector_at(0);
        Vector W_prev = Vector::Zero(1);
        for (int k = 0; k < T; ++k) {
            const StepRecord& rec = link.step(X, W_prev, v);
            sum[static_cast<std::size_t>(k)] += rec.err[0];
            sum2[static_cast<std::size_t>(k)] += rec.err[0] * rec.err[0];
            const Vector W = w.vector_at(static_cast<std::uint64_t>(k));
            X = tp.A * X + W;  // U = 0; the invariance makes the choice irrelevant
            W_prev = W;
        }
    }
    for (int k = 0; k < T; ++k) {
        const double mean = sum[static_cast<std::size_t>(k)] / runs;
        const double var =
            sum2[static_cast<std::size_t>(k)] / runs - mean * mean;
        CHECK(std::abs(mean) <= 4.0 * std::sqrt(var / runs));
    }
}

TEST_CASE("pipeline: step consistency and covariance positivity") {
    const GameConfig cfg = fixtures::sweep_config();
    const auto& tp = cfg.distribution.types[0];
    CommLink link(tp, cfg.scheduler, cfg.noise, DecoderInit::prior_mean);
    const GaussianStream w(stream_key(5, 0, StreamKind::process_noise), cfg.noise.sigma_w);
    const GaussianStream v(stream_key(5, 0, StreamKind::channel_noise), cfg.noise.sigma_v);
    const GaussianStream x0(stream_key(5, 0, StreamKind::initial_state), cfg.noise.sigma_x);
    Vector X = tp.nu0 + x0.vector_at(0);
    Vector W_prev = Vector::Zero(1);
    for (int k = 0; k < 400; ++k) {
        const StepRecord& rec = link.step(X, W_prev, v);
        // Y is formed as exactly X - err: recomputing the subtraction must
        // reproduce it bit for bit. The add-back X = Y + err then holds to
        // one rounding of the largest operand (exact only in real arithmetic).
        CHECK(rec.Y[0] == X[0] - rec.err[0]);
        const double scale =
            std::max({1.0, std::abs(X[0]), std::abs(rec.Y[0]), std::abs(rec.err[0])});
        CHECK(std::abs(rec.Y[0] + rec.err[0] - X[0]) <= 4.0 * 1e-16 * scale);
        CHECK(link.state().P(0, 0) >= -1e-12);
        if (rec.gamma) {
            CHECK(rec.c.has_value());
            CHECK(rec.d.has_value());
        } else {
            CHECK_FALSE(rec.c.has_value());
            CHECK_FALSE(rec.d.has_value());
        }
        const Vector W = w.vector_at(static_cast<std::uint64_t>(k));
        X = tp.A * X + W;
        W_prev = W;
    }
}

TEST_CASE("pipeline: matrix fixture keeps P symmetric PSD") {
    const GameConfig cfg = fixtures::two_type_config();
    const auto& tp = cfg.distribution.types[0];
    CommLink link(tp, cfg.scheduler, cfg.noise, DecoderInit::prior_mean);
    const GaussianStream w(stream_key(6, 0, StreamKind::process_noise), cfg.noise.sigma_w);
    const GaussianStream v(stream_key(6, 0, StreamKind::channel_noise), cfg.noise.sigma_v);
    const GaussianStream x0(stream_key(6, 0, StreamKind::initial_state), cfg.noise.sigma_x);
    Vector X = tp.nu0 + x0.vector_at(0);
    Vector W_prev = Vector::Zero(2);
    for (int k = 0; k < 200; ++k) {
        (void)link.step(X, W_prev, v);
        const Matrix& P = link.state().P;
        CHECK((P - P.transpose()).cwiseAbs().maxCoeff() <= 1e-14);
        Eigen::SelfAdjointEigenSolver<Matrix> es(P);
        CHECK(es.eigenvalues().minCoeff() >= -1e-12);
        const Vector W = w.vector_at(static_cast<std::uint64_t>(k));
        X = tp.A * X + W;
        W_prev = W;
    }
}

TEST_CASE("pipeline: zero decoder initialization also stays control-free") {
    const GameConfig cfg = fixtures::modela_config();
    const auto& tp = cfg.distribution.types[0];
    const auto run = [&](double u_scale) {
        CommLink link(tp, cfg.scheduler, cfg.noise, DecoderInit::zero);
        const GaussianStream w(stream_key(13, 0, StreamKind::process_noise), cfg.noise.sigma_w);
        const GaussianStream v(stream_key(13, 0, StreamKind::channel_noise), cfg.noise.sigma_v);
        Vector X = tp.nu0;  // deterministic start
        Vector W_prev = Vector::Zero(1);
        std::vector<double> errs;
        for (int k = 0; k < 100; ++k) {
            const StepRecord& rec = link.step(X, W_prev, v);
            errs.push_back(rec.err[0]);
            const Vector U = scalar_vec(u_scale * rec.Y[0]);
            link.note_control(U);
            const Vector W = w.vector_at(static_cast<std::uint64_t>(k));
            X = tp.A * X + tp.B * U + W;
            W_prev = W;
        }
        return errs;
    };
    CHECK(run(0.0) == run(-0.5));
}
