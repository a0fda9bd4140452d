#include "cce/network.hpp"

#include <cmath>
#include <cstring>

#include "cce/errors.hpp"

namespace cce {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Mat init_weight(std::size_t rows, std::size_t cols, InitMode mode, Rng& rng) {
    Mat m(rows, cols);
    const double bound = mode == InitMode::PaperUniform
                             ? 1.0
                             : 1.0 / std::sqrt(static_cast<double>(cols));
    for (double& x : m.data) x = rng.uniform(-bound, bound);
    return m;
}

} // namespace

LstmCellParams init_lstm_cell(std::size_t hidden, std::size_t input_dim,
                              InitMode mode, Rng& rng) {
    LstmCellParams cell;
    cell.w_i = init_weight(hidden, input_dim, mode, rng);
    cell.w_f = init_weight(hidden, input_dim, mode, rng);
    cell.w_o = init_weight(hidden, input_dim, mode, rng);
    cell.w_g = init_weight(hidden, input_dim, mode, rng);
    cell.u_i = init_weight(hidden, hidden, mode, rng);
    cell.u_f = init_weight(hidden, hidden, mode, rng);
    cell.u_o = init_weight(hidden, hidden, mode, rng);
    cell.u_g = init_weight(hidden, hidden, mode, rng);
    cell.b_i.assign(hidden, 0.0);
    cell.b_f.assign(hidden, 1.0);
    cell.b_o.assign(hidden, 0.0);
    cell.b_g.assign(hidden, 0.0);
    return cell;
}

BiLstmParams init_bilstm(std::size_t hidden, std::size_t input_dim,
                         std::size_t num_tags, InitMode mode, Rng& rng) {
    BiLstmParams params;
    params.fwd = init_lstm_cell(hidden, input_dim, mode, rng);
    params.bwd = init_lstm_cell(hidden, input_dim, mode, rng);
    params.w_proj = init_weight(num_tags, 2 * hidden, mode, rng);
    params.b_proj.assign(num_tags, 0.0);
    return params;
}

namespace {

BackpropCache::Step run_step(const LstmCellParams& cell, std::span<const double> x,
                             const Vec& h_prev, const Vec& c_prev) {
    const std::size_t hidden = cell.hidden();
    BackpropCache::Step step;
    step.i = cell.b_i;
    step.f = cell.b_f;
    step.o = cell.b_o;
    step.g = cell.b_g;
    matvec_add(cell.w_i, x, step.i);
    matvec_add(cell.w_f, x, step.f);
    matvec_add(cell.w_o, x, step.o);
    matvec_add(cell.w_g, x, step.g);
    matvec_add(cell.u_i, h_prev, step.i);
    matvec_add(cell.u_f, h_prev, step.f);
    matvec_add(cell.u_o, h_prev, step.o);
    matvec_add(cell.u_g, h_prev, step.g);

    step.c.resize(hidden);
    step.tanh_c.resize(hidden);
    step.h.resize(hidden);
    for (std::size_t j = 0; j < hidden; ++j) {
        step.i[j] = sigmoid(step.i[j]);
        step.f[j] = sigmoid(step.f[j]);
        step.o[j] = sigmoid(step.o[j]);
        step.g[j] = std::tanh(step.g[j]);
        step.c[j] = step.f[j] * c_prev[j] + step.i[j] * step.g[j];
        step.tanh_c[j] = std::tanh(step.c[j]);
        step.h[j] = step.o[j] * step.tanh_c[j];
    }
    return step;
}

} // namespace

LstmState lstm_step(const LstmCellParams& cell, std::span<const double> x,
                    const LstmState& prev) {
    auto step = run_step(cell, x, prev.h, prev.c);
    return {std::move(step.h), std::move(step.c)};
}

namespace {

Mat forward_impl(const BiLstmParams& params, const Mat& inputs, BackpropCache* cache) {
    if (inputs.cols != params.input_dim())
        throw ValidationError("input width does not match network input dimension");
    const std::size_t t_count = inputs.rows;
    const std::size_t hidden = params.hidden();

    std::vector<BackpropCache::Step> fwd_steps(t_count);
    std::vector<BackpropCache::Step> bwd_steps(t_count);
    const Vec zero(hidden, 0.0);

    for (std::size_t t = 0; t < t_count; ++t) {
        const Vec& h_prev = t == 0 ? zero : fwd_steps[t - 1].h;
        const Vec& c_prev = t == 0 ? zero : fwd_steps[t - 1].c;
        fwd_steps[t] = run_step(params.fwd, inputs.row(t), h_prev, c_prev);
    }
    for (std::size_t n = 0; n < t_count; ++n) {
        const std::size_t t = t_count - 1 - n;
        const Vec& h_prev = n == 0 ? zero : bwd_steps[t + 1].h;
        const Vec& c_prev = n == 0 ? zero : bwd_steps[t + 1].c;
        bwd_steps[t] = run_step(params.bwd, inputs.row(t), h_prev, c_prev);
    }

    Mat hidden_mat(t_count, 2 * hidden);
    for (std::size_t t = 0; t < t_count; ++t) {
        auto out = hidden_mat.row(t);
        for (std::size_t j = 0; j < hidden; ++j) {
            out[j] = fwd_steps[t].h[j];
            out[hidden + j] = bwd_steps[t].h[j];
        }
    }

    if (cache) {
        cache->inputs = inputs;
        cache->fwd_steps = std::move(fwd_steps);
        cache->bwd_steps = std::move(bwd_steps);
        cache->hidden = hidden_mat;
        cache->projected = false;
        cache->dropout_mask = Mat{};
        cache->keep_prob = 1.0;
    }
    return hidden_mat;
}

} // namespace

Mat forward_bilstm(const BiLstmParams& params, const Mat& inputs) {
    return forward_impl(params, inputs, nullptr);
}

Mat forward_bilstm(const BiLstmParams& params, const Mat& inputs, BackpropCache& cache) {
    return forward_impl(params, inputs, &cache);
}

namespace {

Mat project_impl(const BiLstmParams& params, const Mat& hidden,
                 const Mat* dropout_mask, double keep_prob, BackpropCache* cache) {
    if (!(keep_prob > 0.0 && keep_prob <= 1.0))
        throw ValidationError("keep probability must be in (0, 1]");
    if (hidden.cols != 2 * params.hidden())
        throw ValidationError("hidden width does not match projection input");
    if (dropout_mask &&
        (dropout_mask->rows != hidden.rows || dropout_mask->cols != hidden.cols))
        throw ValidationError("dropout mask shape does not match hidden states");

    const std::size_t k = params.num_tags();
    Mat emissions(hidden.rows, k);
    Vec dropped(hidden.cols);
    for (std::size_t t = 0; t < hidden.rows; ++t) {
        auto h = hidden.row(t);
        for (std::size_t j = 0; j < hidden.cols; ++j) {
            const double m = dropout_mask ? (*dropout_mask)(t, j) : 1.0;
            dropped[j] = h[j] * m / keep_prob;
        }
        auto out = emissions.row(t);
        for (std::size_t tag = 0; tag < k; ++tag) out[tag] = params.b_proj[tag];
        for (std::size_t tag = 0; tag < k; ++tag) {
            const double* w = params.w_proj.data.data() + tag * params.w_proj.cols;
            double acc = 0.0;
            for (std::size_t j = 0; j < hidden.cols; ++j) acc += w[j] * dropped[j];
            out[tag] += acc;
        }
    }

    if (cache) {
        // bitwise identity so NaN payloads still match their own cache
        const bool same = cache->hidden.rows == hidden.rows &&
                          cache->hidden.cols == hidden.cols &&
                          std::memcmp(cache->hidden.data.data(), hidden.data.data(),
                                      hidden.data.size() * sizeof(double)) == 0;
        if (!same)
            throw ValidationError("projection cache does not match the forward pass");
        cache->projected = true;
        cache->dropout_mask = dropout_mask ? *dropout_mask : Mat{};
        cache->keep_prob = keep_prob;
    }
    return emissions;
}

} // namespace

Mat project(const BiLstmParams& params, const Mat& hidden) {
    return project_impl(params, hidden, nullptr, 1.0, nullptr);
}

Mat project(const BiLstmParams& params, const Mat& hidden, const Mat* dropout_mask,
            double keep_prob) {
    return project_impl(params, hidden, dropout_mask, keep_prob, nullptr);
}

Mat project(const BiLstmParams& params, const Mat& hidden, const Mat* dropout_mask,
            double keep_prob, BackpropCache& cache) {
    return project_impl(params, hidden, dropout_mask, keep_prob, &cache);
}

namespace {

LstmCellParams zero_grads_like(const LstmCellParams& cell) {
    LstmCellParams g;
    g.w_i = Mat(cell.w_i.rows, cell.w_i.cols);
    g.w_f = Mat(cell.w_f.rows, cell.w_f.cols);
    g.w_o = Mat(cell.w_o.rows, cell.w_o.cols);
    g.w_g = Mat(cell.w_g.rows, cell.w_g.cols);
    g.u_i = Mat(cell.u_i.rows, cell.u_i.cols);
    g.u_f = Mat(cell.u_f.rows, cell.u_f.cols);
    g.u_o = Mat(cell.u_o.rows, cell.u_o.cols);
    g.u_g = Mat(cell.u_g.rows, cell.u_g.cols);
    g.b_i.assign(cell.b_i.size(), 0.0);
    g.b_f.assign(cell.b_f.size(), 0.0);
    g.b_o.assign(cell.b_o.size(), 0.0);
    g.b_g.assign(cell.b_g.size(), 0.0);
    return g;
}

// BPTT over one direction. step_order lists input positions in processing
// order; d_hidden_col selects this direction's half of the hidden gradient.
void backward_direction(const LstmCellParams& cell,
                        const std::vector<BackpropCache::Step>& steps,
                        const Mat& inputs, const Mat& d_hidden,
                        std::size_t d_hidden_col, bool reversed,
                        LstmCellParams& grads, Mat& d_inputs) {
    const std::size_t t_count = steps.size();
    const std::size_t hidden = cell.hidden();
    const Vec zero(hidden, 0.0);

    Vec dh_next(hidden, 0.0); // gradient flowing from the step processed after
    Vec dc_next(hidden, 0.0);
    Vec dz_i(hidden), dz_f(hidden), dz_o(hidden), dz_g(hidden);

    for (std::size_t n = 0; n < t_count; ++n) {
        // Walk steps in reverse processing order.
        const std::size_t t = reversed ? n : t_count - 1 - n;
        const auto& step = steps[t];
        const bool first_step = reversed ? t == t_count - 1 : t == 0;
        const std::size_t prev_t = reversed ? t + 1 : t - 1;
        const Vec& h_prev = first_step ? zero : steps[prev_t].h;
        const Vec& c_prev = first_step ? zero : steps[prev_t].c;

        for (std::size_t j = 0; j < hidden; ++j) {
            const double dh = d_hidden(t, d_hidden_col + j) + dh_next[j];
            const double d_o = dh * step.tanh_c[j];
            double dc = dh * step.o[j] * (1.0 - step.tanh_c[j] * step.tanh_c[j]) +
                        dc_next[j];
            const double d_i = dc * step.g[j];
            const double d_g = dc * step.i[j];
            const double d_f = dc * c_prev[j];
            dc_next[j] = dc * step.f[j];
            dz_i[j] = d_i * step.i[j] * (1.0 - step.i[j]);
            dz_f[j] = d_f * step.f[j] * (1.0 - step.f[j]);
            dz_o[j] = d_o * step.o[j] * (1.0 - step.o[j]);
            dz_g[j] = d_g * (1.0 - step.g[j] * step.g[j]);
        }

        auto x = inputs.row(t);
        add_outer(grads.w_i, dz_i, x);
        add_outer(grads.w_f, dz_f, x);
        add_outer(grads.w_o, dz_o, x);
        add_outer(grads.w_g, dz_g, x);
        add_outer(grads.u_i, dz_i, h_prev);
        add_outer(grads.u_f, dz_f, h_prev);
        add_outer(grads.u_o, dz_o, h_prev);
        add_outer(grads.u_g, dz_g, h_prev);
        for (std::size_t j = 0; j < hidden; ++j) {
            grads.b_i[j] += dz_i[j];
            grads.b_f[j] += dz_f[j];
            grads.b_o[j] += dz_o[j];
            grads.b_g[j] += dz_g[j];
        }

        auto dx = d_inputs.row(t);
        matTvec_add(cell.w_i, dz_i, dx);
        matTvec_add(cell.w_f, dz_f, dx);
        matTvec_add(cell.w_o, dz_o, dx);
        matTvec_add(cell.w_g, dz_g, dx);

        std::fill(dh_next.begin(), dh_next.end(), 0.0);
        matTvec_add(cell.u_i, dz_i, dh_next);
        matTvec_add(cell.u_f, dz_f, dh_next);
        matTvec_add(cell.u_o, dz_o, dh_next);
        matTvec_add(cell.u_g, dz_g, dh_next);
    }
}

} // namespace

NetworkGrads network_backward(const BiLstmParams& params, const BackpropCache& cache,
                              const Mat& d_emissions) {
    if (cache.fwd_steps.size() != cache.inputs.rows || !cache.projected)
        throw ValidationError("backward pass needs a cache from forward_bilstm and project");
    if (d_emissions.rows != cache.inputs.rows ||
        d_emissions.cols != params.num_tags())
        throw ValidationError("emission gradient shape does not match the cached pass");

    const std::size_t t_count = cache.inputs.rows;
    const std::size_t width = cache.hidden.cols;
    const bool has_mask = !cache.dropout_mask.empty();

    NetworkGrads grads;
    grads.fwd = zero_grads_like(params.fwd);
    grads.bwd = zero_grads_like(params.bwd);
    grads.w_proj = Mat(params.w_proj.rows, params.w_proj.cols);
    grads.b_proj.assign(params.b_proj.size(), 0.0);
    grads.d_inputs = Mat(t_count, params.input_dim());

    // Projection stage: emissions = dropped * W_p^T + b_p.
    Mat d_hidden(t_count, width);
    Vec dropped(width);
    for (std::size_t t = 0; t < t_count; ++t) {
        auto h = cache.hidden.row(t);
        for (std::size_t j = 0; j < width; ++j) {
            const double m = has_mask ? cache.dropout_mask(t, j) : 1.0;
            dropped[j] = h[j] * m / cache.keep_prob;
        }
        auto de = d_emissions.row(t);
        add_outer(grads.w_proj, de, dropped);
        for (std::size_t tag = 0; tag < params.num_tags(); ++tag)
            grads.b_proj[tag] += de[tag];

        auto dh = d_hidden.row(t);
        matTvec_add(params.w_proj, de, dh);
        for (std::size_t j = 0; j < width; ++j) {
            const double m = has_mask ? cache.dropout_mask(t, j) : 1.0;
            dh[j] *= m / cache.keep_prob;
        }
    }

    backward_direction(params.fwd, cache.fwd_steps, cache.inputs, d_hidden, 0,
                       /*reversed=*/false, grads.fwd, grads.d_inputs);
    backward_direction(params.bwd, cache.bwd_steps, cache.inputs, d_hidden,
                       params.hidden(), /*reversed=*/true, grads.bwd,
                       grads.d_inputs);
    return grads;
}

} // namespace cce
