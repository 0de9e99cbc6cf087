#include "mfgsim/comm.hpp"

#include <algorithm>

namespace mfgsim {

Vector predict(const LinkState& ls, const Matrix& A, const Matrix& B) {
    return A * ls.Y_prev + B * ls.U_prev;
}

bool schedule(const Vector& delta, const SchedulerParams& sp, int k) {
    if (k == 0) return true;  // first instant always transmits
    return delta.dot(sp.S * delta) >= sp.alpha;
}

Vector encode(const Vector& X, const Vector& Yhat) { return X - Yhat; }

Vector channel_transmit(const Vector& c, const GaussianStream& channel_noise, int k) {
    return c + channel_noise.vector_at(static_cast<std::uint64_t>(k));
}

Matrix decode_gain(const Matrix& P, const Matrix& sigma_v) {
    const Eigen::Index n = P.rows();
    if (n == 1) {
        const double denom = P(0, 0) + sigma_v(0, 0);
        Matrix G(1, 1);
        G(0, 0) = denom > 0.0 ? P(0, 0) / denom : 0.0;
        return G;
    }
    const Matrix denom = P + sigma_v;
    Eigen::LLT<Matrix> llt(denom);
    if (llt.info() == Eigen::Success) {
        // G = P denom^{-1}; both symmetric, so solve on the left and transpose
        return llt.solve(P).transpose();
    }
    // PSD boundary (noiseless oracle): pseudoinverse via eigendecomposition
    Eigen::SelfAdjointEigenSolver<Matrix> es(denom);
    const double cutoff = 1e-12 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    Vector inv = es.eigenvalues();
    for (Eigen::Index i = 0; i < n; ++i) inv[i] = inv[i] > cutoff ? 1.0 / inv[i] : 0.0;
    return P * es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

DecodeResult decode(const Vector& Yhat, bool gamma, const Vector* d, const Matrix& P,
                    const Matrix& sigma_v) {
    if (!gamma) return {Yhat, P};
    const Matrix G = decode_gain(P, sigma_v);
    const Matrix I = Matrix::Identity(P.rows(), P.cols());
    Matrix Pnew = (I - G) * P;
    Pnew = 0.5 * (Pnew + Pnew.transpose());
    return {Yhat + G * (*d), Pnew};
}

Matrix propagate_covariance(const Matrix& P, const Matrix& A, const Matrix& sigma_w) {
    Matrix out = A * P * A.transpose() + sigma_w;
    return 0.5 * (out + out.transpose());
}

CommLink::CommLink(const AgentTypeParams& type, const SchedulerParams& sched,
                   const NoiseModel& noise, DecoderInit init)
    : type_(type), sched_(sched), sigma_w_(noise.sigma_w), sigma_v_(noise.sigma_v),
      init_(init) {
    const Eigen::Index n = type_.n();
    state_.Y_prev = Vector::Zero(n);
    state_.U_prev = Vector::Zero(type_.m());
    state_.P = noise.sigma_x;
    state_.err_prev = Vector::Zero(n);
    delta_ = Vector::Zero(n);
}

const StepRecord& CommLink::step(const Vector& X, const Vector& W_prev,
                                 const GaussianStream& channel_noise) {
    const int k = state_.k;
    if (k == 0) {
        // decoder prior: mean nu0 (or 0 under the zero convention), covariance sigma_x
        const Vector Yhat0 =
            init_ == DecoderInit::prior_mean ? type_.nu0 : Vector::Zero(type_.n()).eval();
        delta_ = X - Yhat0;
    } else {
        state_.P = propagate_covariance(state_.P, type_.A, sigma_w_);
        // control-free innovation recursion; equals X - predict() in exact arithmetic
        delta_ = type_.A * state_.err_prev + W_prev;
    }

    bool gamma;
    if (tamper_) {
        const Vector probe = delta_ + type_.B * state_.U_prev;
        gamma = schedule(probe, sched_, k);
    } else {
        gamma = schedule(delta_, sched_, k);
    }

    record_.gamma = gamma;
    if (gamma) {
        record_.c = delta_;
        record_.d = channel_transmit(*record_.c, channel_noise, k);
        const Matrix G = decode_gain(state_.P, sigma_v_);
        record_.err = delta_ - G * (*record_.d);
        Matrix Pnew = (Matrix::Identity(state_.P.rows(), state_.P.cols()) - G) * state_.P;
        state_.P = 0.5 * (Pnew + Pnew.transpose());
    } else {
        record_.c.reset();
        record_.d.reset();
        record_.err = delta_;
    }
    record_.Y = X - record_.err;

    state_.err_prev = record_.err;
    state_.Y_prev = record_.Y;
    state_.k = k + 1;
    return record_;
}

void CommLink::note_control(const Vector& U) { state_.U_prev = U; }

}  // namespace mfgsim
