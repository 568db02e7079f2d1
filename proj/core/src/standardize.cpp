#include "dae/standardize.hpp"

#include <algorithm>
#include <cmath>

#include "dae/error.hpp"

namespace dae {

StandardizationStats fit_standardization(const Dataset& train, bool exempt_padding) {
    train.validate();
    if (train.size() == 0) throw DataError("cannot fit standardization on an empty dataset");
    const Eigen::Index n_features = train.events.cols();
    const int fpo = train.layout.features_per_object;

    StandardizationStats stats;
    stats.exempt_padding = exempt_padding;
    stats.features_per_object = fpo;
    stats.mean.assign(static_cast<std::size_t>(n_features), 0.0);
    stats.stddev.assign(static_cast<std::size_t>(n_features), 1.0);

    for (Eigen::Index c = 0; c < n_features; ++c) {
        const Eigen::Index pt_col = (c / fpo) * fpo;
        double sum = 0.0;
        std::size_t count = 0;
        for (Eigen::Index r = 0; r < train.events.rows(); ++r) {
            if (exempt_padding && train.events(r, pt_col) == 0.0) continue;
            sum += train.events(r, c);
            ++count;
        }
        if (count == 0) continue;
        const double mean = sum / static_cast<double>(count);
        double sq = 0.0;
        for (Eigen::Index r = 0; r < train.events.rows(); ++r) {
            if (exempt_padding && train.events(r, pt_col) == 0.0) continue;
            const double d = train.events(r, c) - mean;
            sq += d * d;
        }
        stats.mean[static_cast<std::size_t>(c)] = mean;
        stats.stddev[static_cast<std::size_t>(c)] = std::max(std::sqrt(sq / static_cast<double>(count)), kStdFloor);
    }
    return stats;
}

EventMatrix apply_standardization(const EventMatrix& events, const StandardizationStats& stats) {
    if (static_cast<std::size_t>(events.cols()) != stats.size())
        throw ContractError("standardization stats have " + std::to_string(stats.size()) + " features, data has " +
                            std::to_string(events.cols()));
    EventMatrix out(events.rows(), events.cols());
    const int fpo = stats.features_per_object;
    for (Eigen::Index r = 0; r < events.rows(); ++r) {
        for (Eigen::Index c = 0; c < events.cols(); ++c) {
            const Eigen::Index pt_col = (c / fpo) * fpo;
            if (stats.exempt_padding && events(r, pt_col) == 0.0) {
                out(r, c) = 0.0;
                continue;
            }
            const auto k = static_cast<std::size_t>(c);
            out(r, c) = (events(r, c) - stats.mean[k]) / stats.stddev[k];
        }
    }
    return out;
}

Dataset apply_standardization(const Dataset& data, const StandardizationStats& stats) {
    Dataset out;
    out.layout = data.layout;
    out.labels = data.labels;
    out.provenance = data.provenance;
    out.events = apply_standardization(data.events, stats);
    return out;
}

}  // namespace dae
