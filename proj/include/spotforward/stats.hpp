#pragma once

#include <istream>
#include <string>
#include <vector>

namespace spotforward {

//! One observed quote pair: the same instrument on both venues.
struct QuoteRow {
    std::string date;
    int tenor_months = 0;
    double fwd_onshore = 0.0;
    double fwd_offshore = 0.0;
    double spot_onshore = 0.0;
    double spot_offshore = 0.0;
};

//! Annualized log forward gap: (12 / tenor) * log(fwd_onshore / fwd_offshore).
double annualized_ratio(const QuoteRow& row);

struct WedgeStats {
    int tenor_months = 0;
    std::size_t count = 0;
    double mean = 0.0;
    double stddev = 0.0; // sample standard deviation (n - 1)
    double q25 = 0.0;    // quantiles by linear interpolation of order stats
    double median = 0.0;
    double q75 = 0.0;
    double spot_log_ratio_mean = 0.0;
};

//! Per-tenor summary of the annualized forward gap, tenors ascending.
std::vector<WedgeStats> wedge_stats(const std::vector<QuoteRow>& rows);

//! Parse a quotes CSV with the exact header
//! date,tenor_months,fwd_onshore,fwd_offshore,spot_onshore,spot_offshore
std::vector<QuoteRow> read_quotes_csv(std::istream& in);

} // namespace spotforward
