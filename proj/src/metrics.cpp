#include "ddfc/metrics.hpp"

#include <cmath>
#include <numeric>

namespace ddfc {

double accumulated_rmse(const std::vector<Matrix>& estimated, const std::vector<Matrix>& reference)
{
    require(!estimated.empty(), "accumulated_rmse needs at least one repeat");
    require(estimated.size() == reference.size(), "accumulated_rmse: repeat counts differ");
    double total = 0.0;
    for (std::size_t r = 0; r < estimated.size(); ++r) {
        require(estimated[r].rows() == reference[r].rows() && estimated[r].cols() == reference[r].cols(),
                "accumulated_rmse: control sequences are not aligned");
        total += (estimated[r] - reference[r]).squaredNorm();
    }
    return std::sqrt(total / static_cast<double>(estimated.size()));
}

Vector avg_cost_trajectory(const std::vector<Vector>& running_costs)
{
    require(!running_costs.empty(), "avg_cost_trajectory needs at least one run");
    Vector sum = Vector::Zero(running_costs.front().size());
    for (const Vector& v : running_costs) {
        require(v.size() == sum.size(), "avg_cost_trajectory: runs are not aligned");
        sum += v;
    }
    return sum / static_cast<double>(running_costs.size());
}

Vector accumulate_running_cost(ConstVectorRef integrand, ConstVectorRef deltas)
{
    require(integrand.size() == deltas.size(), "accumulate_running_cost: one integrand value per interval");
    Vector out(integrand.size() + 1);
    out[0] = 0.0;
    for (Index i = 0; i < integrand.size(); ++i) {
        out[i + 1] = out[i] + integrand[i] * deltas[i];
    }
    return out;
}

double mean(const std::vector<double>& values)
{
    require(!values.empty(), "mean of an empty sample");
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double standard_error(const std::vector<double>& values)
{
    if (values.size() < 2) {
        return 0.0;
    }
    const double mu = mean(values);
    double ss = 0.0;
    for (double v : values) {
        ss += (v - mu) * (v - mu);
    }
    return std::sqrt(ss / static_cast<double>(values.size() - 1) / static_cast<double>(values.size()));
}

} // namespace ddfc
