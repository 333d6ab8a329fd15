#ifndef ERGOALG_ERRORS_HPP
#define ERGOALG_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ergo {

// Base of the library's error hierarchy. The CLI maps subclasses to exit
// codes: parse_error -> 2, domain_error/carrier_mismatch -> 3,
// budget_error -> 4.
class error : public std::runtime_error {
public:
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

class parse_error : public error {
public:
    explicit parse_error(const std::string& what) : error(what) {}
};

// Precondition violations: bad measures, non-partitions, period mismatch...
class domain_error : public error {
public:
    explicit domain_error(const std::string& what) : error(what) {}
};

class carrier_mismatch : public domain_error {
public:
    explicit carrier_mismatch(const std::string& what) : domain_error(what) {}
};

// Raised when a certified computation cannot finish within the configured
// depth/size budget (reported, never silent).
class budget_error : public error {
public:
    explicit budget_error(const std::string& what) : error(what) {}
};

} // namespace ergo

#endif
