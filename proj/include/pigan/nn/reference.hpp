#pragma once

#include <span>
#include <vector>

#include "pigan/common.hpp"
#include "pigan/nn/jet.hpp"
#include "pigan/nn/mlp.hpp"

// Serial, one-sample-at-a-time implementations kept as test oracles and as the
// baseline for the kernel benchmarks. They share no code with JetTape.
namespace pigan::nn::reference {

Jet2 operator+(const Jet2& a, const Jet2& b);
Jet2 operator*(double s, const Jet2& a);
Jet2 operator*(const Jet2& a, const Jet2& b);
Jet2 tanh(const Jet2& a);

/// Network output components as spatial jets at (x, xi).
std::vector<Jet2> forward_jet(const Mlp& net, Coord2 x, std::span<const double> xi);

/// Plain forward pass with explicit loops.
std::vector<double> forward(const Mlp& net, std::span<const double> input);

}  // namespace pigan::nn::reference
