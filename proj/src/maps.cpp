#include "hdim/maps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "hdim/errors.hpp"

namespace hdim {

namespace {

constexpr double kBandTol = 1e-9;
constexpr double kIfsTol = 1e-12;

Complex ipow(Complex z, int d) {
    Complex result{1.0, 0.0};
    Complex base = z;
    while (d > 0) {
        if (d & 1) result *= base;
        base *= base;
        d >>= 1;
    }
    return result;
}

struct PowerForm {
    int d;
    Complex c;
};

PowerForm power_form(const MapKind& kind) {
    if (const auto* p = std::get_if<PowerPlusC>(&kind)) return {p->N + 2, p->c};
    return {std::get<CirclePower>(kind).d, Complex{0.0, 0.0}};
}

const IfsBranch* forward_branch(const LinearIfs& ifs, double t) {
    for (const auto& b : ifs.branches) {
        const double lo = b.ratio * b.target_lo + b.translation;
        const double hi = b.ratio * b.target_hi + b.translation;
        if (t >= lo - kIfsTol && t <= hi + kIfsTol) return &b;
    }
    return nullptr;
}

void require_in_K(const MapDescriptor& map, Complex z, const char* what) {
    if (!map.domain().K.contains_closed(z, kBandTol)) {
        std::ostringstream msg;
        msg << what << ": point " << z << " lies outside K";
        throw DomainError(msg.str());
    }
}

// Conformal derivative of a power map at a preimage x of y, using that every
// preimage shares the modulus |y - c|^{1/d}:
//   Df(x) = d |y - c| / |y| * cos(pi u_x / W) / cos(pi u_y / W).
double power_derivative(const HyperbolicAnnulus& U, int d, double abs_w, double u_x, double u_y) {
    const double fy = radial_density_factor(U, u_y);
    const double fx = radial_density_factor(U, u_x);
    return d * abs_w * std::exp(-u_y) * fy / fx;
}

PreimageSet collect_preimages(const MapDescriptor& map, Complex y, double slack) {
    require_in_K(map, y, "preimages");
    const Domain& dom = map.domain();
    PreimageSet set;
    set.target = y;
    if (const auto* ifs = std::get_if<LinearIfs>(&map.kind())) {
        const ChartPoint py = to_chart(y);
        const double t = ifs_coordinate(dom.K, py.u);
        for (const auto& b : ifs->branches) {
            if (t < b.target_lo - kIfsTol || t > b.target_hi + kIfsTol) continue;
            const double tx = b.ratio * t + b.translation;
            set.points.push_back(from_chart({ifs_log_modulus(dom.K, tx), py.theta}));
            set.derivatives.push_back(1.0 / b.ratio);
        }
        return set;
    }
    const PowerForm pf = power_form(map.kind());
    const Complex w = y - pf.c;
    const double abs_w = std::abs(w);
    if (!(abs_w > 1e-14)) {
        std::ostringstream msg;
        msg << "preimages: target " << y << " is the critical value " << pf.c;
        throw RootError(msg.str());
    }
    const double u_x = std::log(abs_w) / pf.d;
    if (std::abs(u_x) > dom.K.half_width() + slack) return set;
    const double df = power_derivative(dom.U, pf.d, abs_w, u_x, std::log(std::abs(y)));
    const double modulus = std::exp(u_x);
    const double arg_w = std::arg(w);
    set.points.reserve(static_cast<std::size_t>(pf.d));
    for (int j = 0; j < pf.d; ++j) {
        set.points.push_back(std::polar(modulus, (arg_w + kTwoPi * j) / pf.d));
        set.derivatives.push_back(df);
    }
    return set;
}

}  // namespace

Domain::Domain(HyperbolicAnnulus outer, HyperbolicAnnulus inner) : U(outer), K(inner) {
    if (!(U.rho() < K.rho())) {
        std::ostringstream msg;
        msg << "K (rho " << K.rho() << ") must be compactly contained in U (rho " << U.rho() << ")";
        throw GeometryError(msg.str());
    }
}

Domain Domain::from_k(double k) {
    if (!(k > 0.0 && k < 1.0)) throw DomainError("annulus constant k must lie in (0,1)");
    return Domain(HyperbolicAnnulus(k * k / 2.0), HyperbolicAnnulus(k / 2.0));
}

MapDescriptor::MapDescriptor(MapKind kind, Domain domain)
    : kind_(std::move(kind)), domain_(domain) {
    if (const auto* p = std::get_if<PowerPlusC>(&kind_)) {
        if (p->N < 0) throw DomainError("power_plus_c: N must be >= 0");
    } else if (const auto* cp = std::get_if<CirclePower>(&kind_)) {
        if (cp->d < 2) throw DomainError("circle_power: d must be >= 2");
    } else {
        const auto& ifs = std::get<LinearIfs>(kind_);
        if (ifs.branches.empty()) throw DomainError("linear_ifs: at least one branch required");
        for (const auto& b : ifs.branches) {
            if (!(b.ratio > 0.0 && b.ratio < 1.0)) {
                throw DomainError("linear_ifs: contraction ratio must lie in (0,1)");
            }
            if (!(b.target_lo >= 0.0 && b.target_lo < b.target_hi && b.target_hi <= 1.0)) {
                throw DomainError("linear_ifs: target band must satisfy 0 <= lo < hi <= 1");
            }
            const double lo = b.ratio * b.target_lo + b.translation;
            const double hi = b.ratio * b.target_hi + b.translation;
            if (lo < -kIfsTol || hi > 1.0 + kIfsTol) {
                throw DomainError("linear_ifs: branch image leaves [0,1]");
            }
        }
    }
}

MapDescriptor MapDescriptor::power_plus_c(int N, Complex c, Domain domain) {
    return MapDescriptor(PowerPlusC{N, c}, domain);
}

MapDescriptor MapDescriptor::circle_power(int d, Domain domain) {
    return MapDescriptor(CirclePower{d}, domain);
}

MapDescriptor MapDescriptor::linear_ifs(std::vector<IfsBranch> branches, Domain domain) {
    return MapDescriptor(LinearIfs{std::move(branches)}, domain);
}

MapDescriptor MapDescriptor::uniform_cantor(int branches, double ratio, Domain domain) {
    if (branches < 1) throw DomainError("uniform_cantor: need at least one branch");
    if (branches * ratio > 1.0 + kIfsTol) throw DomainError("uniform_cantor: branches overlap");
    std::vector<IfsBranch> list;
    const double gap = branches > 1 ? (1.0 - branches * ratio) / (branches - 1) : 0.0;
    for (int i = 0; i < branches; ++i) {
        list.push_back({ratio, i * (ratio + gap), 0.0, 1.0});
    }
    return linear_ifs(std::move(list), domain);
}

int MapDescriptor::degree() const noexcept {
    if (const auto* p = std::get_if<PowerPlusC>(&kind_)) return p->N + 2;
    if (const auto* cp = std::get_if<CirclePower>(&kind_)) return cp->d;
    return static_cast<int>(std::get<LinearIfs>(kind_).branches.size());
}

double ifs_coordinate(const HyperbolicAnnulus& K, double log_modulus) {
    const double a = K.half_width();
    return (log_modulus + a) / (2.0 * a);
}

double ifs_log_modulus(const HyperbolicAnnulus& K, double t) {
    const double a = K.half_width();
    return -a + 2.0 * a * t;
}

Complex evaluate(const MapDescriptor& map, Complex z) {
    require_in_K(map, z, "evaluate");
    if (const auto* ifs = std::get_if<LinearIfs>(&map.kind())) {
        const ChartPoint p = to_chart(z);
        const double t = ifs_coordinate(map.domain().K, p.u);
        const IfsBranch* b = forward_branch(*ifs, t);
        if (b == nullptr) throw DomainError("evaluate: point lies in no branch interval");
        const double t_image = (t - b->translation) / b->ratio;
        return from_chart({ifs_log_modulus(map.domain().K, t_image), p.theta});
    }
    const PowerForm pf = power_form(map.kind());
    return ipow(z, pf.d) + pf.c;
}

double conformal_derivative(const MapDescriptor& map, Complex z) {
    if (const auto* ifs = std::get_if<LinearIfs>(&map.kind())) {
        require_in_K(map, z, "conformal_derivative");
        const double t = ifs_coordinate(map.domain().K, std::log(std::abs(z)));
        const IfsBranch* b = forward_branch(*ifs, t);
        if (b == nullptr) throw DomainError("conformal_derivative: point lies in no branch interval");
        return 1.0 / b->ratio;
    }
    const PowerForm pf = power_form(map.kind());
    const Complex fz = ipow(z, pf.d) + pf.c;
    const HyperbolicAnnulus& U = map.domain().U;
    const double euclidean = pf.d * std::abs(ipow(z, pf.d - 1));
    return euclidean * hyperbolic_density(U, fz) / hyperbolic_density(U, z);
}

PreimageSet preimages(const MapDescriptor& map, Complex y, double slack) {
    PreimageSet set = collect_preimages(map, y, slack);
    if (set.points.empty()) {
        std::ostringstream msg;
        msg << "preimages: no preimage of " << y << " lands in K";
        throw EmptyPreimage(msg.str());
    }
    return set;
}

PreimageSet preimages_or_empty(const MapDescriptor& map, Complex y, double slack) {
    return collect_preimages(map, y, slack);
}

double branch_radius(double derivative, const DomainConstants& constants) {
    if (!(derivative > 0.0)) throw DomainError("branch_radius: derivative must be positive");
    const double q = constants.alpha / derivative;
    const double radius = std::log((5.0 + q) / (5.0 - q));
    return std::min(radius, constants.delta_big);
}

double branch_radius(const MapDescriptor& map, Complex x, const DomainConstants& constants) {
    return branch_radius(conformal_derivative(map, x), constants);
}

DerivativeRange derivative_range(const MapDescriptor& map, SampleGrid grid) {
    if (grid.n_radial < 2 || grid.n_angular < 1) throw DomainError("derivative_range: grid too small");
    const double a = map.domain().K.half_width();
    DerivativeRange range;
    range.sup = 0.0;
    range.inf = std::numeric_limits<double>::infinity();
    range.min_local_degree = std::numeric_limits<int>::max();
    range.max_local_degree = 0;
    for (std::size_t i = 0; i < grid.n_radial; ++i) {
        const double u = -a + 2.0 * a * static_cast<double>(i) / static_cast<double>(grid.n_radial - 1);
        for (std::size_t j = 0; j < grid.n_angular; ++j) {
            const double theta = -kPi + kTwoPi * static_cast<double>(j) / static_cast<double>(grid.n_angular);
            const PreimageSet set = preimages_or_empty(map, from_chart({u, theta}));
            const int count = static_cast<int>(set.points.size());
            range.min_local_degree = std::min(range.min_local_degree, count);
            range.max_local_degree = std::max(range.max_local_degree, count);
            for (double df : set.derivatives) {
                range.sup = std::max(range.sup, df);
                range.inf = std::min(range.inf, df);
            }
        }
    }
    if (range.max_local_degree == 0) {
        throw EmptyPreimage("derivative_range: no sampled point of K has a preimage in K");
    }
    return range;
}

double condition_number(const MapDescriptor& map, SampleGrid grid) {
    const DerivativeRange range = derivative_range(map, grid);
    return range.sup / range.inf;
}

bool degree_area_check(int degree, double sup_derivative) {
    return static_cast<double>(degree) <= sup_derivative * sup_derivative;
}

bool degree_area_check(const MapDescriptor& map, SampleGrid grid) {
    return degree_area_check(map.degree(), derivative_range(map, grid).sup);
}

}  // namespace hdim
