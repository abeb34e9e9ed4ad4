#pragma once

#include "lfmmi/fsa.hpp"

namespace lfmmi {

/// Intersection of two acceptors. Epsilon moves are sequenced (all of a's,
/// then b's, before each matched label) so every pair of accepting paths
/// yields exactly one result path. Epsilon self-loops are no-op moves and are
/// not carried into the result. The result is connected.
///
/// Throws Error(kLabelSpace) when both label spaces are known and differ.
Fsa compose(const Fsa &a, const Fsa &b);

/// Removes states that are not on some start -> final path, and arcs of
/// weight Zero(). State 0 stays the start state; surviving states keep their
/// relative order. An acceptor with an empty language becomes a single
/// non-final state.
Fsa connect(const Fsa &a);

/// Epsilon arcs (label 0, weight above Zero()) ordered so that every arc's
/// source precedes the sources of the arcs reachable from it. Throws
/// Error(kInvalidGraph) when the epsilon arcs contain a cycle.
std::vector<Arc> epsilon_arcs_topological(const Fsa &a);

}  // namespace lfmmi
