#pragma once

#include <cstddef>
#include <vector>

namespace ddfc {

/// Partition t_0 < t_1 < ... < t_N of [t0, T].
class TimeGrid {
public:
    explicit TimeGrid(std::vector<double> nodes);

    static TimeGrid uniform(double t0, double terminal, std::size_t steps);

    double t0() const { return nodes_.front(); }
    double terminal() const { return nodes_.back(); }
    std::size_t steps() const { return nodes_.size() - 1; }
    double time(std::size_t i) const { return nodes_[i]; }
    double delta(std::size_t i) const { return nodes_[i + 1] - nodes_[i]; }
    const std::vector<double>& nodes() const { return nodes_; }

    /// Splits every interval into `factor` equal pieces.
    TimeGrid refined(std::size_t factor) const;

private:
    std::vector<double> nodes_;
};

} // namespace ddfc
