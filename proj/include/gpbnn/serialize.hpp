#pragma once

#include "gpbnn/gp.hpp"
#include "gpbnn/gpbnn.hpp"
#include "gpbnn/metrics.hpp"

#include <json.hpp>

#include <filesystem>

namespace gpbnn {

using Json = nlohmann::json;

Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);
Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j);

Json to_json(const KernelConfig& k);
KernelConfig kernel_from_json(const Json& j);

/// Hyperparameters plus the training data; the factorization is rebuilt on load.
Json to_json(const GPPosterior& gp);
GPPosterior gp_from_json(const Json& j);

Json to_json(const TransferMethod& t);
TransferMethod transfer_from_json(const Json& j);

Json to_json(const BNNConfig& c);
BNNConfig bnn_config_from_json(const Json& j, BNNConfig base = {});

Json to_json(const ChainConfig& c);
ChainConfig chain_config_from_json(const Json& j, ChainConfig base = {});

Json to_json(const EvalReport& r);

/// Full model: low-fidelity GP, transfer, network config, scalings and draws.
Json to_json(const GPBNNModel& model);
GPBNNModel model_from_json(const Json& j);

Json read_json(const std::filesystem::path& path);
void write_json(const Json& j, const std::filesystem::path& path);

}  // namespace gpbnn
