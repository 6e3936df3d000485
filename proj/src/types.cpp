#include "gravity/types.hpp"

namespace gravity {

std::string to_string(Instrument k) {
    switch (k) {
        case Instrument::Debt: return "debt";
        case Instrument::Equity: return "equity";
        case Instrument::Total: return "total";
    }
    return "?";
}

std::string to_string(Basis b) {
    switch (b) {
        case Basis::ResidencyRestated: return "residency";
        case Basis::NationalityRestated: return "nationality";
        case Basis::ResidencyCPIS: return "cpis";
    }
    return "?";
}

std::string to_string(Group g) {
    switch (g) {
        case Group::ASEAN: return "ASEAN";
        case Group::OECD: return "OECD";
        case Group::ROW: return "ROW";
        case Group::SGP_BUCKET: return "SGP";
    }
    return "?";
}

Instrument instrument_from_string(const std::string& s) {
    if (s == "debt" || s == "Debt" || s == "DEBT") return Instrument::Debt;
    if (s == "equity" || s == "Equity" || s == "EQUITY") return Instrument::Equity;
    if (s == "total" || s == "Total" || s == "TOTAL") return Instrument::Total;
    throw MalformedRowError("unknown instrument: '" + s + "'");
}

Basis basis_from_string(const std::string& s) {
    if (s == "residency") return Basis::ResidencyRestated;
    if (s == "nationality") return Basis::NationalityRestated;
    if (s == "cpis") return Basis::ResidencyCPIS;
    throw InputError("unknown basis: '" + s + "' (expected residency|nationality|cpis)");
}

Group group_from_string(const std::string& s) {
    if (s == "ASEAN") return Group::ASEAN;
    if (s == "OECD") return Group::OECD;
    if (s == "ROW") return Group::ROW;
    if (s == "SGP") return Group::SGP_BUCKET;
    throw MalformedRowError("unknown group: '" + s + "' (expected ASEAN|OECD|ROW)");
}

}  // namespace gravity
