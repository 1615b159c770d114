#pragma once

#include <string>

namespace spotforward {

/**
 * Fixed-notation (never scientific) rendering with 12 significant digits,
 * used for all CSV numeric cells so files are byte-stable across runs.
 */
std::string format_sig12(double x);

} // namespace spotforward
