#ifndef SYNCNET_SCENARIO_IO_HPP
#define SYNCNET_SCENARIO_IO_HPP

#include <string>
#include <string_view>

#include "syncnet/model.hpp"

namespace syncnet {

// Scenario files are JSON objects grouped as
//   topology: nodes, edges, gm, kf_attachments   (1-based node ids)
//   link:     delay_range_ns, t_std_ns, r_std_ns, t_mean_ns, r_mean_ns
//   clock:    offset_range_ns, skew_ppm_range
//   exchange: k, training_rounds, delta_t_ns, turnaround_ns
//   bp:       max_iters, epsilon_ns, damping
//   mc:       runs, seed
//   epoch_ns
// Missing keys keep the defaults of Scenario; unknown keys are rejected.
// kf_attachments entries are [kf_node, parent].
//
// Parsing checks structure and types only. Call validate_scenario for the
// model invariants.
Scenario parse_scenario(std::string_view json_text);
Scenario load_scenario(const std::string& path);
std::string scenario_to_json(const Scenario& scenario);

}  // namespace syncnet

#endif  // SYNCNET_SCENARIO_IO_HPP
