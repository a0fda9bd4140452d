#ifndef CCE_NETWORK_HPP
#define CCE_NETWORK_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "cce/rng.hpp"
#include "cce/tensor.hpp"

namespace cce {

// Standard LSTM cell, no peepholes. Gate order everywhere is
// input, forget, output, candidate.
struct LstmCellParams {
    Mat w_i, w_f, w_o, w_g; // H x input_dim
    Mat u_i, u_f, u_o, u_g; // H x H
    Vec b_i, b_f, b_o, b_g; // H

    std::size_t hidden() const { return w_i.rows; }
    std::size_t input_dim() const { return w_i.cols; }
};

struct BiLstmParams {
    LstmCellParams fwd;
    LstmCellParams bwd;
    Mat w_proj; // K x 2H
    Vec b_proj; // K

    std::size_t hidden() const { return fwd.hidden(); }
    std::size_t input_dim() const { return fwd.input_dim(); }
    std::size_t num_tags() const { return w_proj.rows; }
};

enum class InitMode {
    PaperUniform,  // every weight uniform in [-1, 1]
    ScaledUniform, // uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)]
};

// Forget-gate biases start at 1, all other biases at 0.
LstmCellParams init_lstm_cell(std::size_t hidden, std::size_t input_dim,
                              InitMode mode, Rng& rng);
BiLstmParams init_bilstm(std::size_t hidden, std::size_t input_dim,
                         std::size_t num_tags, InitMode mode, Rng& rng);

struct LstmState {
    Vec h, c;
};

// One LSTM step: i = s(W_i x + U_i h + b_i), f and o likewise,
// g = tanh(W_g x + U_g h + b_g), c' = f*c + i*g, h' = o*tanh(c').
LstmState lstm_step(const LstmCellParams& cell, std::span<const double> x,
                    const LstmState& prev);

// Everything a backward pass needs from the forward pass.
struct BackpropCache {
    struct Step {
        Vec i, f, o, g, c, tanh_c, h;
    };
    Mat inputs;                  // T x input_dim
    std::vector<Step> fwd_steps; // indexed by input position t
    std::vector<Step> bwd_steps; // indexed by input position t
    Mat hidden;                  // T x 2H
    bool projected = false;
    Mat dropout_mask;  // T x 2H, empty when projecting without dropout
    double keep_prob = 1.0;
};

// Row t of the result is [fwd_h(t) ; bwd_h(t)]; both directions start from
// zero states. Pass a cache to keep what network_backward needs.
Mat forward_bilstm(const BiLstmParams& params, const Mat& inputs);
Mat forward_bilstm(const BiLstmParams& params, const Mat& inputs,
                   BackpropCache& cache);

// Linear projection of hidden states to per-tag emission scores. In training
// mode an inverted-dropout mask scales the kept units by 1/keep_prob.
Mat project(const BiLstmParams& params, const Mat& hidden);
Mat project(const BiLstmParams& params, const Mat& hidden,
            const Mat* dropout_mask, double keep_prob);
Mat project(const BiLstmParams& params, const Mat& hidden,
            const Mat* dropout_mask, double keep_prob, BackpropCache& cache);

struct NetworkGrads {
    LstmCellParams fwd;
    LstmCellParams bwd;
    Mat w_proj;
    Vec b_proj;
    Mat d_inputs; // T x input_dim, to be routed back through the window
};

// Exact gradients for the forward pass captured in the cache.
NetworkGrads network_backward(const BiLstmParams& params, const BackpropCache& cache,
                              const Mat& d_emissions);

} // namespace cce

#endif
