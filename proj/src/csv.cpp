#include "mvqc/csv.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "mvqc/errors.hpp"

namespace mvqc::csv {

namespace {

constexpr const char* kEntropyHeader = "ansatz,n,depth,p,mean_entropy_bits,ci_low,ci_high,n_samples,seed";

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

} // namespace

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_variance(std::ostream& os, const std::vector<VarianceRow>& rows) {
    os << "ansatz,n,depth,p,variant,grad_index,variance,ci_low,ci_high,n_samples,seed\n";
    for (const auto& r : rows) {
        os << to_string(r.ansatz) << ',' << r.n << ',' << r.depth << ',' << fmt(r.p) << ',' << to_string(r.variant)
           << ',' << r.grad_index << ',' << fmt(r.variance) << ',' << fmt(r.ci_low) << ',' << fmt(r.ci_high) << ','
           << r.n_samples << ',' << r.seed << '\n';
    }
}

void write_traces(std::ostream& os, const std::vector<OptimizationRun>& runs) {
    os << "trace_id,iter,cost\n";
    for (const auto& run : runs) {
        for (std::size_t it = 0; it < run.trace.cost_history.size(); ++it)
            os << run.trace_id << ',' << it << ',' << fmt(run.trace.cost_history[it]) << '\n';
    }
}

void write_landscape(std::ostream& os, const LandscapeSlice& slice) {
    os << "alpha,beta,cost\n";
    for (std::size_t i = 0; i < slice.alphas.size(); ++i) {
        for (std::size_t j = 0; j < slice.betas.size(); ++j) {
            os << fmt(slice.alphas[i]) << ',' << fmt(slice.betas[j]) << ',';
            if (const auto& v = slice.at(i, j)) os << fmt(*v);
            os << '\n';
        }
    }
}

void write_entropy(std::ostream& os, const EntropyTable& table) {
    os << kEntropyHeader << '\n';
    for (const auto& r : table.rows) {
        os << to_string(r.ansatz) << ',' << r.n << ',' << r.depth << ',' << fmt(r.p) << ','
           << fmt(r.mean_entropy_bits) << ',' << fmt(r.ci_low) << ',' << fmt(r.ci_high) << ',' << r.n_samples << ','
           << r.seed << '\n';
    }
}

void write_mutualinfo(std::ostream& os, const std::vector<MIRow>& rows) {
    os << "ansatz,n,depth,p,estimator,bits,stderr,N_a,N_b,N_c,seed\n";
    for (const auto& r : rows) {
        os << to_string(r.ansatz) << ',' << r.n << ',' << r.depth << ',' << fmt(r.p) << ',' << to_string(r.estimator)
           << ',' << fmt(r.bits) << ',' << fmt(r.std_error) << ',' << r.n_a << ',' << r.n_b << ',' << r.n_c << ','
           << r.seed << '\n';
    }
}

EntropyTable read_entropy(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != kEntropyHeader) throw ContractError("not an entropy.csv header: " + line);
    EntropyTable table;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = split(line);
        if (f.size() != 9) throw ContractError("entropy.csv line " + std::to_string(lineno) + ": expected 9 fields");
        try {
            EntropyRow r{ansatz_from_string(f[0]), std::stoi(f[1]), std::stoi(f[2]), std::stod(f[3]), std::stod(f[4]),
                         std::stod(f[5]), std::stod(f[6]), std::stoi(f[7]), std::stoull(f[8])};
            if (table.rows.empty()) table.ansatz = r.ansatz;
            else if (r.ansatz != table.ansatz) throw ContractError("mixed ansatz kinds");
            table.rows.push_back(r);
        } catch (const std::logic_error& e) {
            throw ContractError("entropy.csv line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (table.rows.empty()) throw ContractError("entropy.csv has no rows");
    return table;
}

} // namespace mvqc::csv
