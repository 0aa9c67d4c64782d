#ifndef MAGROD_IO_HPP
#define MAGROD_IO_HPP

// CSV emission for the data products (trajectories, section slices,
// Melnikov scans) plus the number format shared by all of them.

#include <charconv>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "magrod/manifolds.hpp"
#include "magrod/model.hpp"

namespace magrod {

// Shortest decimal that round-trips to the same double, scientific
// notation. Deterministic across runs and platforms using IEEE doubles,
// so identical configurations produce bitwise-identical files.
inline std::string format_number(double v) {
    char buf[40];
    const auto res =
        std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific);
    return std::string(buf, res.ptr);
}

inline void write_csv_row(std::ostream& os, const std::vector<double>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) os << ',';
        os << format_number(row[i]);
    }
    os << '\n';
}

// t, theta, psi, p_theta, p_psi, H, F at every accepted integrator node.
inline void write_trajectory(std::ostream& os, const Trajectory<4>& tr,
                             const Params& p) {
    os << "t,theta,psi,p_theta,p_psi,H,F\n";
    for (std::size_t i = 0; i < tr.times().size(); ++i) {
        const State s = State::from_vec(tr.states()[i]);
        write_csv_row(os, {tr.times()[i], s.theta, s.psi, s.p_theta, s.p_psi,
                           hamiltonian(s, p), first_integral(s, p)});
    }
}

inline void write_slice(std::ostream& os, const SectionSlice& sl) {
    os << "orbit_id,cont_param,theta,psi,p_theta,p_psi,t_cross\n";
    for (const auto& q : sl.points)
        write_csv_row(os, {double(q.orbit_id), q.cont_param, q.state.theta,
                           q.state.psi, q.state.p_theta, q.state.p_psi,
                           q.t_cross});
}

inline void write_melnikov(std::ostream& os,
                           const std::vector<std::pair<double, double>>& scan) {
    os << "psi0,M\n";
    for (const auto& [kappa, m] : scan) write_csv_row(os, {kappa, m});
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

// Minimal reader for round-trip checks and downstream scripts: header
// line of names, then comma-separated doubles.
inline CsvTable read_csv(std::istream& is) {
    CsvTable t;
    std::string line;
    if (!std::getline(is, line))
        throw std::invalid_argument("empty CSV stream");
    std::istringstream hs(line);
    for (std::string cell; std::getline(hs, cell, ',');)
        t.header.push_back(cell);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::istringstream ls(line);
        for (std::string cell; std::getline(ls, cell, ',');) {
            double v = 0;
            const auto res =
                std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (res.ec != std::errc{})
                throw std::invalid_argument("bad CSV number: " + cell);
            row.push_back(v);
        }
        if (row.size() != t.header.size())
            throw std::invalid_argument("CSV row width mismatch");
        t.rows.push_back(std::move(row));
    }
    return t;
}

} // namespace magrod

#endif
