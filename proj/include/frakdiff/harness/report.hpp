#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <json.hpp>

#include "frakdiff/errors.hpp"

namespace frakdiff::harness {

/// One CSV cell: text, an integer, a real (17 significant digits) or empty.
using Cell = std::variant<std::monostate, std::string, long long, double, bool>;

inline std::string format_real(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::string format_cell(const Cell& c) {
    struct V {
        std::string operator()(std::monostate) const { return ""; }
        std::string operator()(const std::string& s) const { return s; }
        std::string operator()(long long v) const { return std::to_string(v); }
        std::string operator()(double v) const { return format_real(v); }
        std::string operator()(bool b) const { return b ? "true" : "false"; }
    };
    return std::visit(V{}, c);
}

/// RFC 4180 field quoting.
inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

/// Table with a fixed header; rows keep insertion order.
class Table {
public:
    explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}

    void add(std::vector<Cell> row) {
        if (row.size() != header_.size()) throw Error("report row width does not match the header");
        rows_.push_back(std::move(row));
    }

    const std::vector<std::string>& header() const { return header_; }
    const std::vector<std::vector<Cell>>& rows() const { return rows_; }
    bool empty() const { return rows_.empty(); }

    std::string to_csv() const {
        std::string out;
        auto line = [&](const auto& cells, auto fmt) {
            for (std::size_t i = 0; i < cells.size(); ++i) {
                if (i) out += ',';
                out += csv_escape(fmt(cells[i]));
            }
            out += "\r\n";
        };
        line(header_, [](const std::string& s) { return s; });
        for (const auto& r : rows_) line(r, [](const Cell& c) { return format_cell(c); });
        return out;
    }

    /// Row `i` rendered as "col=value" pairs, for diagnostics.
    std::string describe(std::size_t i) const {
        std::string out;
        for (std::size_t k = 0; k < header_.size(); ++k)
            out += (k ? ", " : "") + header_[k] + "=" + format_cell(rows_[i][k]);
        return out;
    }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<Cell>> rows_;
};

/// Outcome of one experiment before it is written to disk.
struct Report {
    Table table{{}};
    std::vector<std::pair<std::string, Table>> extra_tables;  ///< (suffix, table)
    nlohmann::json results = nlohmann::json::object();
    std::vector<std::string> warnings;
    std::vector<std::string> violations;  ///< proven-bound failures
    std::vector<double> row_seconds;      ///< per-row wall time; kept out of the CSV
};

/// Calls f() and adds its wall time to `seconds`.
template <class F>
auto timed(double& seconds, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    auto r = f();
    seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

/// Runs f(i) for i in [0, n) on `threads` workers; results land at index i, so
/// output order never depends on completion order. The first exception (lowest
/// index) is rethrown after all workers finish.
template <class F>
auto parallel_map(std::size_t n, unsigned threads, F&& f) -> std::vector<decltype(f(std::size_t{}))> {
    using R = decltype(f(std::size_t{}));
    std::vector<std::optional<R>> slots(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
            try {
                slots[i].emplace(f(i));
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const unsigned t = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    if (t == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned k = 0; k < t; ++k) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    std::vector<R> out;
    out.reserve(n);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

/// parallel_map that also records each item's wall time in `seconds` (index order).
template <class F>
auto timed_map(std::size_t n, unsigned threads, std::vector<double>& seconds, F&& f) {
    auto pairs = parallel_map(n, threads, [&](std::size_t i) {
        double s = 0.0;
        auto r = timed(s, [&] { return f(i); });
        return std::make_pair(std::move(r), s);
    });
    std::vector<decltype(f(std::size_t{}))> out;
    for (auto& [r, s] : pairs) {
        out.push_back(std::move(r));
        seconds.push_back(s);
    }
    return out;
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open " + path + " for writing");
    f << content;
    if (!f) throw Error("failed writing " + path);
}

}  // namespace frakdiff::harness
