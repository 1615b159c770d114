#include "spotforward/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "spotforward/log.hpp"

namespace spotforward {

double annualized_ratio(const QuoteRow& row) {
    if (row.tenor_months <= 0)
        throw std::invalid_argument("tenor_months must be positive");
    if (!(row.fwd_onshore > 0.0) || !(row.fwd_offshore > 0.0))
        throw std::invalid_argument("forward prices must be strictly positive");
    return 12.0 / row.tenor_months * std::log(row.fwd_onshore / row.fwd_offshore);
}

namespace {

//! Quantile by linear interpolation of order statistics (h = (n-1)p).
double quantile_sorted(const std::vector<double>& sorted, double p) {
    const std::size_t n = sorted.size();
    if (n == 1) return sorted[0];
    const double h = static_cast<double>(n - 1) * p;
    const auto lo = static_cast<std::size_t>(h);
    if (lo + 1 >= n) return sorted[n - 1];
    const double w = h - static_cast<double>(lo);
    return sorted[lo] + w * (sorted[lo + 1] - sorted[lo]);
}

} // namespace

std::vector<WedgeStats> wedge_stats(const std::vector<QuoteRow>& rows) {
    std::map<int, std::vector<const QuoteRow*>> by_tenor;
    for (const QuoteRow& r : rows) by_tenor[r.tenor_months].push_back(&r);

    for (int standard : {1, 2, 3, 6, 12})
        if (by_tenor.find(standard) == by_tenor.end())
            logging::warn("no quotes for the %d-month tenor; group skipped", standard);

    std::vector<WedgeStats> out;
    for (const auto& [tenor, group] : by_tenor) {
        WedgeStats ws;
        ws.tenor_months = tenor;
        ws.count = group.size();
        std::vector<double> ratios;
        ratios.reserve(group.size());
        double spot_sum = 0.0;
        for (const QuoteRow* r : group) {
            ratios.push_back(annualized_ratio(*r));
            if (!(r->spot_onshore > 0.0) || !(r->spot_offshore > 0.0))
                throw std::invalid_argument("spot prices must be strictly positive");
            spot_sum += std::log(r->spot_onshore / r->spot_offshore);
        }
        double mean = 0.0;
        for (double v : ratios) mean += v;
        mean /= static_cast<double>(ratios.size());
        double var = 0.0;
        for (double v : ratios) var += (v - mean) * (v - mean);
        ws.mean = mean;
        ws.stddev = ratios.size() > 1
                        ? std::sqrt(var / static_cast<double>(ratios.size() - 1))
                        : 0.0;
        std::sort(ratios.begin(), ratios.end());
        ws.q25 = quantile_sorted(ratios, 0.25);
        ws.median = quantile_sorted(ratios, 0.5);
        ws.q75 = quantile_sorted(ratios, 0.75);
        ws.spot_log_ratio_mean = spot_sum / static_cast<double>(group.size());
        out.push_back(ws);
    }
    return out;
}

std::vector<QuoteRow> read_quotes_csv(std::istream& in) {
    static const std::string kHeader =
        "date,tenor_months,fwd_onshore,fwd_offshore,spot_onshore,spot_offshore";
    std::string line;
    if (!std::getline(in, line))
        throw std::invalid_argument("quotes CSV is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kHeader)
        throw std::invalid_argument("quotes CSV has an unexpected header: " + line);

    std::vector<QuoteRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 6)
            throw std::invalid_argument("quotes CSV line " + std::to_string(line_no) +
                                        ": expected 6 fields");
        QuoteRow r;
        r.date = fields[0];
        try {
            std::size_t pos = 0;
            r.tenor_months = std::stoi(fields[1], &pos);
            if (pos != fields[1].size()) throw std::invalid_argument("trailing characters");
            r.fwd_onshore = std::stod(fields[2]);
            r.fwd_offshore = std::stod(fields[3]);
            r.spot_onshore = std::stod(fields[4]);
            r.spot_offshore = std::stod(fields[5]);
        } catch (const std::exception&) {
            throw std::invalid_argument("quotes CSV line " + std::to_string(line_no) +
                                        ": malformed numeric field");
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

} // namespace spotforward
