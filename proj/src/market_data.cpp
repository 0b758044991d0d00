#include "ratecast/market_data.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "ratecast/error.hpp"

namespace ratecast {
namespace {

std::string_view trim(std::string_view s) {
    constexpr std::string_view ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t pos = 0;
    while (true) {
        const auto comma = line.find(',', pos);
        cells.push_back(trim(line.substr(pos, comma - pos)));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return cells;
}

bool parse_int(std::string_view s, int& out) {
    if (s.empty()) return false;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc{} && ptr == end;
}

std::string location(std::string_view source, std::size_t line, std::string_view column) {
    std::ostringstream os;
    os << source << ": row " << line;
    if (!column.empty()) os << ", column '" << column << "'";
    return os.str();
}

}  // namespace

Date parse_date(std::string_view text) {
    text = trim(text);
    int y = 0, m = 0, d = 0;
    bool parsed = false;
    if (text.size() == 10 && text[2] == '.' && text[5] == '.') {
        parsed = parse_int(text.substr(0, 2), d) && parse_int(text.substr(3, 2), m) &&
                 parse_int(text.substr(6, 4), y);
    } else if (text.size() == 10 && text[4] == '-' && text[7] == '-') {
        parsed = parse_int(text.substr(0, 4), y) && parse_int(text.substr(5, 2), m) &&
                 parse_int(text.substr(8, 2), d);
    }
    const Date date{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                    std::chrono::day{static_cast<unsigned>(d)}};
    if (!parsed || m < 1 || d < 1 || !date.ok()) {
        throw LoadError("unparseable date '" + std::string(text) + "'");
    }
    return date;
}

std::string format_date(Date d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                  static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
    return buf;
}

RateMatrix::RateMatrix(std::vector<Date> dates, std::vector<std::string> maturities,
                       std::vector<double> values)
    : dates_(std::move(dates)), maturities_(std::move(maturities)), values_(std::move(values)) {
    if (values_.size() != dates_.size() * maturities_.size()) {
        throw LoadError("rate grid is not dense: expected " +
                        std::to_string(dates_.size() * maturities_.size()) + " values, got " +
                        std::to_string(values_.size()));
    }
    for (std::size_t i = 1; i < dates_.size(); ++i) {
        if (!(std::chrono::sys_days{dates_[i - 1]} < std::chrono::sys_days{dates_[i]})) {
            throw LoadError("dates not strictly increasing at row " + std::to_string(i + 1) +
                            " (" + format_date(dates_[i]) + ")");
        }
    }
    std::set<std::string_view> seen;
    for (const auto& label : maturities_) {
        if (!seen.insert(label).second) throw LoadError("duplicate maturity label '" + label + "'");
    }
}

std::size_t RateMatrix::index_of(std::string_view maturity) const {
    const auto it = std::find(maturities_.begin(), maturities_.end(), maturity);
    if (it == maturities_.end()) throw KeyError("unknown maturity '" + std::string(maturity) + "'");
    return static_cast<std::size_t>(it - maturities_.begin());
}

RateMatrix parse_rate_matrix(std::istream& in, std::string_view source) {
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> labels;
    bool have_header = false;
    std::vector<Date> dates;
    std::vector<double> values;

    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split_csv(line);
        if (!have_header) {
            if (cells.size() < 2) throw LoadError(location(source, line_no, "") + ": header needs a date column and at least one maturity");
            for (std::size_t c = 1; c < cells.size(); ++c) {
                if (cells[c].empty()) throw LoadError(location(source, line_no, "") + ": empty maturity label in column " + std::to_string(c + 1));
                labels.emplace_back(cells[c]);
            }
            have_header = true;
            continue;
        }
        if (cells.size() != labels.size() + 1) {
            throw LoadError(location(source, line_no, "") + ": expected " +
                            std::to_string(labels.size() + 1) + " cells, found " +
                            std::to_string(cells.size()));
        }
        try {
            dates.push_back(parse_date(cells[0]));
        } catch (const LoadError& e) {
            throw LoadError(location(source, line_no, "Date") + ": " + e.what());
        }
        for (std::size_t c = 1; c < cells.size(); ++c) {
            const auto cell = cells[c];
            if (cell.empty()) throw LoadError(location(source, line_no, labels[c - 1]) + ": missing value");
            double v = 0.0;
            const auto* end = cell.data() + cell.size();
            auto [ptr, ec] = std::from_chars(cell.data(), end, v);
            if (ec != std::errc{} || ptr != end) {
                throw LoadError(location(source, line_no, labels[c - 1]) + ": cannot parse '" + std::string(cell) + "'");
            }
            values.push_back(v);
        }
    }
    if (!have_header) throw LoadError(std::string(source) + ": empty file");
    if (dates.empty()) throw LoadError(std::string(source) + ": no data rows");
    return RateMatrix(std::move(dates), std::move(labels), std::move(values));
}

RateMatrix load_rate_matrix(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open '" + path.string() + "'");
    return parse_rate_matrix(in, path.string());
}

void write_rate_matrix(std::ostream& out, const RateMatrix& matrix) {
    out << "Date";
    for (const auto& label : matrix.maturities()) out << ',' << label;
    out << '\n';
    char buf[64];
    for (std::size_t r = 0; r < matrix.rows(); ++r) {
        out << format_date(matrix.dates()[r]);
        for (double v : matrix.row(r)) {
            auto res = std::to_chars(buf, buf + sizeof buf, v);
            out << ',' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
        }
        out << '\n';
    }
}

void save_rate_matrix(const std::filesystem::path& path, const RateMatrix& matrix) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    write_rate_matrix(out, matrix);
}

RateSeries series_for(const RateMatrix& matrix, std::string_view maturity) {
    const auto col = matrix.index_of(maturity);
    RateSeries s;
    s.maturity = std::string(maturity);
    s.dates = matrix.dates();
    s.rates.reserve(matrix.rows());
    for (std::size_t r = 0; r < matrix.rows(); ++r) s.rates.push_back(matrix.at(r, col));
    return s;
}

DatasetSplit split_datasets(std::span<const std::string> labels) {
    DatasetSplit split;
    for (const auto& label : labels) {
        if (label.find('/') != std::string::npos) {
            split.money_market.push_back(label);
        } else if (!label.empty() && label.back() == 'Y') {
            split.term.push_back(label);
        } else {
            throw ClassificationError("maturity '" + label + "' is neither a day-count nor a year label");
        }
    }
    return split;
}

DatasetSplit split_datasets(const RateMatrix& matrix) { return split_datasets(matrix.maturities()); }

}  // namespace ratecast
