#pragma once

#include <string>

#include <json.hpp>

#include "parporo/chains.hpp"
#include "parporo/geometry.hpp"
#include "parporo/improvement.hpp"
#include "parporo/interval.hpp"
#include "parporo/porosity.hpp"
#include "parporo/weights.hpp"

namespace parporo {

using nlohmann::json;

// Exact values go out as "p/q" strings, floating ones as shortest round-trip
// decimal strings ("inf" for unbounded ends).
json decimal_json(double v);
json decimal_json(long double v);
json interval_json(const Interval& iv);
json root_spec_json(const RootSpec& spec);
json address_json(const DyadicAddress& a);
json params_json(const StoppingParams& s);

json to_json(const HoleResult& h);
json to_json(const CollectionReport& c);
json to_json(const PorosityReport& r);
json to_json(const A1Result& r);
json to_json(const A1ScanReport& r);
json to_json(const ChainPlan& plan);
json to_json(const StoppingPartition& part, const DecayReport& decay);
json to_json(const TowerPartition& t);
json to_json(const AlphaFit& f);
json to_json(const HarnessReport& h);

std::string porosity_csv(const PorosityReport& r);
std::string a1_csv(const A1ScanReport& r);

// Stable textual form: sorted keys, two-space indent, trailing newline.
std::string render(const json& j);

}  // namespace parporo
