#pragma once

#include <iosfwd>

#include <json.hpp>

#include "kdc/basis.hpp"
#include "kdc/certify.hpp"
#include "kdc/experiment.hpp"
#include "kdc/geometry.hpp"
#include "kdc/hvm.hpp"
#include "kdc/kd.hpp"
#include "kdc/state.hpp"

namespace kdc {

using json = nlohmann::json;

// Wire conventions: complex numbers are [re, im] pairs, matrices are flat
// row-major lists of pairs, vectors are lists of pairs. Finite doubles
// round-trip bit-exactly.
json complex_to_json(const Cx& z);
Cx complex_from_json(const json& j);
json cmatrix_to_json(const CMatrix& m);
CMatrix cmatrix_from_json(const json& j, int rows, int cols);
json cvector_to_json(const CVector& v);
CVector cvector_from_json(const json& j);

// {"d": int, "a_vectors": [...], "b_vectors": [...]}
json basis_to_json(const BasisPair& basis);
BasisPair basis_from_json(const json& j);

// {"rho": [...]} (+ "d")
json state_to_json(const DensityMatrix& rho);
DensityMatrix state_from_json(const json& j);

json kd_to_json(const KDDistribution& q);
KDDistribution kd_from_json(const json& j);

json outcome_to_json(const OutcomeRecord& rec);
OutcomeRecord outcome_from_json(const json& j);

json hvm_to_json(const HiddenVariableModel& model);
json verdict_to_json(const CertificationVerdict& v);

json set_to_json(const PurePositiveSet& set);
PurePositiveSet set_from_json(const json& j);
json witness_to_json(const SeparatingWitness& w);
SeparatingWitness witness_from_json(const json& j);
json floor_to_json(const FloorEstimate& f);

// public record as ndjson: a meta line, then one line per delivery
void write_record(std::ostream& os, const PublicRecord& record);
PublicRecord read_record(std::istream& is);
json ledger_to_json(const SecretLedger& ledger);
SecretLedger ledger_from_json(const json& j);

json analysis_to_json(const AnalysisReport& report);
json postselection_to_json(const PostselectionReport& report);

}  // namespace kdc
