#pragma once

#include <optional>

#include "mfgsim/model.hpp"
#include "mfgsim/rng.hpp"

namespace mfgsim {

/// Decoder-side link state for one agent.
struct LinkState {
    Vector Y_prev;   // last decoder output
    Vector U_prev;   // last control applied
    Matrix P;        // error covariance of the innovation, control-independent
    int k = 0;       // time index
    Vector err_prev; // last relative error X - Y, drives the innovation recursion
};

/// Outputs of one pipeline step.
struct StepRecord {
    bool gamma = false;
    std::optional<Vector> c;  // encoder output, present iff gamma
    std::optional<Vector> d;  // channel output, present iff gamma
    Vector Y;
    Vector err;               // X - Y
};

/// One-step decoder prediction A Y_prev + B U_prev.
Vector predict(const LinkState& ls, const Matrix& A, const Matrix& B);

/// Threshold policy: transmit iff k == 0 (forced) or delta'S delta >= alpha.
bool schedule(const Vector& delta, const SchedulerParams& sp, int k);

/// Predictive encoding of the innovation: c = X - Yhat.
Vector encode(const Vector& X, const Vector& Yhat);

/// AWGN channel: d = c + v_k, v_k read from the agent's stream at index k.
Vector channel_transmit(const Vector& c, const GaussianStream& channel_noise, int k);

/// Linear-MMSE gain G = P (P + sigma_v)^{-1}; pseudoinverse on the PSD
/// boundary so the noiseless oracle (sigma_v = 0) recovers G = I on the
/// range of P and 0 on its null space.
Matrix decode_gain(const Matrix& P, const Matrix& sigma_v);

struct DecodeResult {
    Vector Y;
    Matrix P;
};

/// gamma = 0: hold the prediction. gamma = 1: Y = Yhat + G d, P <- (I-G)P.
DecodeResult decode(const Vector& Yhat, bool gamma, const Vector* d, const Matrix& P,
                    const Matrix& sigma_v);

/// P <- A P A' + sigma_w, applied before scheduling/decoding at each k >= 1.
Matrix propagate_covariance(const Matrix& P, const Matrix& A, const Matrix& sigma_w);

/// The full per-step pipeline for one agent's link:
/// propagate -> schedule -> encode -> transmit -> decode.
///
/// The innovation and the relative error are advanced through their
/// control-free recursions (delta_k = A err_{k-1} + W_{k-1}), so the gamma
/// and err trajectories are bit-identical under any control sequence fed to
/// the plant — the property the dual-effect probe asserts exactly.
class CommLink {
public:
    CommLink(const AgentTypeParams& type, const SchedulerParams& sched,
             const NoiseModel& noise, DecoderInit init);

    /// Advances to time k (must be called with k = 0, 1, 2, ...).
    /// X is the plant state at k; W_prev the process noise applied at k-1
    /// (ignored at k = 0). Returns the step outputs.
    const StepRecord& step(const Vector& X, const Vector& W_prev,
                           const GaussianStream& channel_noise);

    /// Record the control used at the current step (needed only by the
    /// tamper hook; the nominal pipeline never reads it).
    void note_control(const Vector& U);

    const LinkState& state() const { return state_; }

    /// Test hook: feeds B U_prev into the scheduler input, deliberately
    /// breaking control independence. Negative control for the probe.
    void set_tamper_scheduler(bool on) { tamper_ = on; }

private:
    AgentTypeParams type_;
    SchedulerParams sched_;
    Matrix sigma_w_;
    Matrix sigma_v_;
    DecoderInit init_;
    bool tamper_ = false;
    LinkState state_;
    StepRecord record_;
    Vector delta_;
};

}  // namespace mfgsim
