#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace gravity {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct GravityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InputError : GravityError {
    using GravityError::GravityError;
};

struct DuplicateKeyError : InputError {
    using InputError::InputError;
};
struct NegativeValueError : InputError {
    using InputError::InputError;
};
struct UnknownCountryError : InputError {
    using InputError::InputError;
};
struct MalformedRowError : InputError {
    using InputError::InputError;
};
struct UniverseSmallerThanPanelError : InputError {
    using InputError::InputError;
};
struct UnassignedReporterError : InputError {
    using InputError::InputError;
};
struct MissingCityError : InputError {
    using InputError::InputError;
};
struct MissingDistanceError : InputError {
    using InputError::InputError;
};
struct SingleYearPanelError : InputError {
    using InputError::InputError;
};
struct AllColumnsDroppedError : GravityError {
    using GravityError::GravityError;
};
struct NoPositiveOutcomeError : GravityError {
    using GravityError::GravityError;
};
struct NotConvergedError : GravityError {
    using GravityError::GravityError;
};
struct SeparationDetectedError : GravityError {
    using GravityError::GravityError;
};
struct SingularBreadError : GravityError {
    using GravityError::GravityError;
};
struct TooFewClustersError : GravityError {
    using GravityError::GravityError;
};
struct YearAbsentError : InputError {
    using InputError::InputError;
};

// ---------------------------------------------------------------------------
// Core identifiers
// ---------------------------------------------------------------------------

/// ISO-3166 alpha-3 country code. Exactly three uppercase letters.
class CountryCode {
  public:
    CountryCode() = default;
    explicit CountryCode(std::string code) : code_(std::move(code)) {
        if (!valid(code_))
            throw UnknownCountryError("invalid country code: '" + code_ + "'");
    }

    static bool valid(const std::string& s) {
        if (s.size() != 3) return false;
        for (char c : s)
            if (c < 'A' || c > 'Z') return false;
        return true;
    }

    const std::string& str() const { return code_; }

    auto operator<=>(const CountryCode&) const = default;

  private:
    std::string code_;
};

enum class Instrument : std::uint8_t { Debt, Equity, Total };
enum class Basis : std::uint8_t { ResidencyRestated, NationalityRestated, ResidencyCPIS };
enum class Group : std::uint8_t { ASEAN, OECD, ROW, SGP_BUCKET };

std::string to_string(Instrument k);
std::string to_string(Basis b);
std::string to_string(Group g);
Instrument instrument_from_string(const std::string& s);
Basis basis_from_string(const std::string& s);
Group group_from_string(const std::string& s);

/// Observation key: (reporter, counterparty, year, instrument).
struct ObsKey {
    CountryCode reporter;
    CountryCode counterparty;
    int year = 0;
    Instrument instrument = Instrument::Debt;

    auto operator<=>(const ObsKey&) const = default;
};

/// One bilateral holding in USD million.
struct Observation {
    ObsKey key;
    double value = 0.0;  // USD million, >= 0
};

}  // namespace gravity
