#ifndef GSLAM_TESTS_DENSE_ORACLE_HPP
#define GSLAM_TESTS_DENSE_ORACLE_HPP

#include <map>

#include "gslam/map_graph.hpp"

namespace gslam::testsupport {

/// Independent dense Gauss-Newton reference: full normal equations with
/// numeric central-difference Jacobians and Levenberg damping. Shares no
/// code with the production sparse solver.
std::map<NodeId, Transform2> denseOracle(const MapGraph& graph, NodeId anchor,
                                         double* chiOut = nullptr);

}  // namespace gslam::testsupport

#endif  // GSLAM_TESTS_DENSE_ORACLE_HPP
