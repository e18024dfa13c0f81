#include "probe.hpp"

#include <algorithm>
#include <numeric>

#include "rng.hpp"

namespace khop {

StateStore collect_states(const ModelConfig& cfg, const ModelParams& params,
                          const TokenizedData& data, std::span<const std::size_t> idx,
                          int batch) {
    std::vector<std::size_t> all;
    if (idx.empty()) {
        all.resize(data.size());
        std::iota(all.begin(), all.end(), 0);
        idx = all;
    }
    require(!idx.empty(), ErrorCode::invalid_argument, "collect_states: no instances");

    const auto& first = data.instances[idx[0]];
    require(first.hops >= 1 && first.answer_position > first.entity_position,
            ErrorCode::invalid_argument, "collect_states: instances must be questions");

    StateStore store;
    store.n_layers = cfg.n_layers;
    store.d = cfg.d_model;
    store.hops = first.hops;
    store.entity_position = first.entity_position;
    for (int p = first.entity_position; p <= first.answer_position; ++p) {
        store.positions.push_back(p);
    }

    const std::size_t n = idx.size();
    store.states.assign(cfg.n_layers, std::vector<Mat>(store.positions.size()));
    for (auto& per_layer : store.states) {
        for (auto& m : per_layer) {
            m.resize(n, cfg.d_model);
        }
    }
    store.labels.assign(store.hops, std::vector<int>(n, -1));

    TraceOptions topts;
    topts.residual = true;
    ForwardCache cache;
    ActivationTrace trace;
    for (std::size_t start = 0; start < n; start += batch) {
        const std::size_t count = std::min<std::size_t>(batch, n - start);
        Batch b = data.gather(idx.subspan(start, count), /*trim=*/true);
        forward(cfg, params, b, cache, {}, &trace, &topts);
        for (std::size_t r = 0; r < count; ++r) {
            const auto& inst = data.instances[idx[start + r]];
            require(inst.hops == store.hops && inst.entity_position == store.entity_position &&
                        inst.answer_position == store.positions.back(),
                    ErrorCode::invalid_argument,
                    "collect_states: instances do not share a template");
            for (int l = 0; l < cfg.n_layers; ++l) {
                for (std::size_t p = 0; p < store.positions.size(); ++p) {
                    store.states[l][p].row(start + r) =
                        trace.residual[l].row(static_cast<int>(r) * b.T + store.positions[p]);
                }
            }
        }
    }
    return store;
}

ProbeCell train_probe(const Mat& states, const std::vector<int>& labels, int n_classes,
                      std::uint64_t split_seed, const ProbeOptions& opts) {
    const Eigen::Index n = states.rows();
    const Eigen::Index d = states.cols();
    require(n == static_cast<Eigen::Index>(labels.size()), ErrorCode::invalid_argument,
            "train_probe: states/labels size mismatch");
    require(n_classes >= 2, ErrorCode::invalid_argument, "train_probe: need >= 2 classes");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng = Rng(split_seed).stream("probe_split");
    rng.shuffle(order);
    const Eigen::Index train_n = std::max<Eigen::Index>(
        1, static_cast<Eigen::Index>(opts.train_fraction * static_cast<double>(n)));
    const Eigen::Index eval_n = n - train_n;
    require(eval_n >= 1, ErrorCode::invalid_argument, "train_probe: eval fold is empty");

    // Degenerate single-class training folds cannot be fit.
    {
        int first_label = labels[order[0]];
        bool multi = false;
        for (Eigen::Index i = 1; i < train_n; ++i) {
            if (labels[order[i]] != first_label) {
                multi = true;
                break;
            }
        }
        require(multi, ErrorCode::invalid_argument,
                "train_probe: training fold has a single class");
    }

    Mat xtr(train_n, d);
    Mat xev(eval_n, d);
    std::vector<int> ytr(train_n);
    std::vector<int> yev(eval_n);
    std::uint64_t train_hash = 0xcbf29ce484222325ull;
    std::uint64_t eval_hash = 0xcbf29ce484222325ull;
    std::vector<std::size_t> train_idx(train_n);
    std::vector<std::size_t> eval_idx(eval_n);
    for (Eigen::Index i = 0; i < train_n; ++i) {
        train_idx[i] = order[i];
        xtr.row(i) = states.row(order[i]);
        ytr[i] = labels[order[i]];
        train_hash = fnv1a64(&order[i], sizeof(order[i]), train_hash);
    }
    for (Eigen::Index i = 0; i < eval_n; ++i) {
        eval_idx[i] = order[train_n + i];
        xev.row(i) = states.row(order[train_n + i]);
        yev[i] = labels[order[train_n + i]];
        eval_hash = fnv1a64(&order[train_n + i], sizeof(order[0]), eval_hash);
    }

    // Standardize with train-fold statistics.
    Vec mean = xtr.colwise().mean();
    Vec sd(d);
    for (Eigen::Index j = 0; j < d; ++j) {
        const float var = (xtr.col(j).array() - mean(j)).square().mean();
        sd(j) = std::sqrt(var) + 1e-6f;
    }
    xtr = (xtr.rowwise() - mean.transpose()).array().rowwise() / sd.transpose().array();
    xev = (xev.rowwise() - mean.transpose()).array().rowwise() / sd.transpose().array();

    Mat w = Mat::Zero(d, n_classes);
    Vec b = Vec::Zero(n_classes);
    float best_loss = std::numeric_limits<float>::infinity();
    int stall = 0;
    const float inv_n = 1.0f / static_cast<float>(train_n);

    Mat logits(train_n, n_classes);
    Mat probs(train_n, n_classes);
    for (int iter = 0; iter < opts.max_iters; ++iter) {
        logits.noalias() = xtr * w;
        logits.rowwise() += b.transpose();
        float loss = 0.0f;
        for (Eigen::Index i = 0; i < train_n; ++i) {
            const float mx = logits.row(i).maxCoeff();
            Eigen::ArrayXf e = (logits.row(i).array() - mx).exp();
            const float sum = e.sum();
            probs.row(i) = (e / sum).matrix();
            loss += -std::log(std::max(probs(i, ytr[i]), 1e-30f));
            probs(i, ytr[i]) -= 1.0f;
        }
        loss *= inv_n;
        w.noalias() -= opts.lr * inv_n * (xtr.transpose() * probs);
        b.noalias() -= opts.lr * inv_n * probs.colwise().sum().transpose();

        if (loss < best_loss - opts.min_improve) {
            best_loss = loss;
            stall = 0;
        } else if (++stall >= opts.patience) {
            break;
        }
    }

    ProbeCell cell;
    cell.w = std::move(w);
    cell.b = std::move(b);
    cell.train_count = static_cast<int>(train_n);
    cell.eval_count = static_cast<int>(eval_n);
    cell.train_idx = std::move(train_idx);
    cell.eval_idx = std::move(eval_idx);
    cell.train_fold_hash = train_hash;
    cell.eval_fold_hash = eval_hash;

    Mat ev_logits(eval_n, n_classes);
    ev_logits.noalias() = xev * cell.w;
    ev_logits.rowwise() += cell.b.transpose();
    int hits = 0;
    for (Eigen::Index i = 0; i < eval_n; ++i) {
        Eigen::Index arg = 0;
        ev_logits.row(i).maxCoeff(&arg);
        if (static_cast<int>(arg) == yev[i]) {
            ++hits;
        }
    }
    cell.accuracy = static_cast<double>(hits) / static_cast<double>(eval_n);
    return cell;
}

ProbeGrid probe_grid(const EntityGraph& g, const ModelConfig& cfg, const ModelParams& params,
                     const TokenizedData& data, std::span<const std::size_t> idx,
                     std::span<const int> positions, std::uint64_t split_seed,
                     const ProbeOptions& opts) {
    StateStore store = collect_states(cfg, params, data, idx);
    std::vector<int> pos(positions.begin(), positions.end());
    if (pos.empty()) {
        pos = store.positions;
    }

    // Labels: class = offset of the hop-i entity inside its layer (the hop-i
    // entity always lies in layer i).
    std::vector<std::size_t> chosen;
    if (idx.empty()) {
        chosen.resize(data.size());
        std::iota(chosen.begin(), chosen.end(), 0);
    } else {
        chosen.assign(idx.begin(), idx.end());
    }
    const std::size_t n = chosen.size();
    const int per_layer = g.entities_per_layer;
    for (std::size_t i = 0; i < n; ++i) {
        const Query& q = data.instances[chosen[i]].query;
        for (int hop = 1; hop <= store.hops; ++hop) {
            const EntityId e = (hop < store.hops) ? q.bridges[hop - 1] : q.answer;
            store.labels[hop - 1][i] = e - g.layer_begin(hop);
        }
    }

    ProbeGrid grid;
    grid.n_layers = store.n_layers;
    grid.hops = store.hops;
    grid.positions = pos;
    grid.classes = per_layer;
    grid.acc.assign(static_cast<std::size_t>(store.n_layers) * pos.size() * store.hops, 0.0);
    for (int l = 0; l < store.n_layers; ++l) {
        for (std::size_t p = 0; p < pos.size(); ++p) {
            auto it = std::find(store.positions.begin(), store.positions.end(), pos[p]);
            require(it != store.positions.end(), ErrorCode::invalid_argument,
                    "probe_grid: position not captured");
            const std::size_t pi = it - store.positions.begin();
            for (int hop = 1; hop <= store.hops; ++hop) {
                ProbeCell cell =
                    train_probe(store.states[l][pi], store.labels[hop - 1], per_layer,
                                Rng(split_seed).stream("cell", l, pos[p]).key() + hop, opts);
                grid.acc[(static_cast<std::size_t>(l) * pos.size() + p) * store.hops +
                         (hop - 1)] = cell.accuracy;
            }
        }
    }
    return grid;
}

} // namespace khop
