#include "ddfc/rng.hpp"
#include "ddfc/time_grid.hpp"
#include "ddfc/types.hpp"

#include <cmath>
#include <sstream>

namespace ddfc {

std::string format_vector(ConstVectorRef v)
{
    std::ostringstream os;
    os.precision(17);
    os << "(";
    for (Index k = 0; k < v.size(); ++k) {
        os << (k ? ", " : "") << v[k];
    }
    os << ")";
    return os.str();
}

namespace {

std::uint64_t splitmix64(std::uint64_t z)
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> keys)
{
    std::uint64_t h = splitmix64(base);
    for (std::uint64_t k : keys) {
        h = splitmix64(h ^ splitmix64(k + 0x632be59bd9b4e019ULL));
    }
    return h;
}

TimeGrid::TimeGrid(std::vector<double> nodes) : nodes_(std::move(nodes))
{
    require(nodes_.size() >= 2, "TimeGrid needs at least two nodes");
    for (std::size_t i = 0; i + 1 < nodes_.size(); ++i) {
        require(std::isfinite(nodes_[i]) && nodes_[i + 1] > nodes_[i],
                "TimeGrid nodes must be finite and strictly increasing");
    }
}

TimeGrid TimeGrid::uniform(double t0, double terminal, std::size_t steps)
{
    require(steps >= 1, "TimeGrid::uniform needs at least one step");
    require(terminal > t0, "TimeGrid::uniform needs terminal > t0");
    std::vector<double> nodes(steps + 1);
    const double h = (terminal - t0) / static_cast<double>(steps);
    for (std::size_t i = 0; i <= steps; ++i) {
        nodes[i] = t0 + h * static_cast<double>(i);
    }
    nodes.back() = terminal;
    return TimeGrid(std::move(nodes));
}

TimeGrid TimeGrid::refined(std::size_t factor) const
{
    require(factor >= 1, "refinement factor must be >= 1");
    if (factor == 1) {
        return *this;
    }
    std::vector<double> nodes;
    nodes.reserve(steps() * factor + 1);
    for (std::size_t i = 0; i < steps(); ++i) {
        const double h = delta(i) / static_cast<double>(factor);
        for (std::size_t k = 0; k < factor; ++k) {
            nodes.push_back(nodes_[i] + h * static_cast<double>(k));
        }
    }
    nodes.push_back(terminal());
    return TimeGrid(std::move(nodes));
}

} // namespace ddfc
