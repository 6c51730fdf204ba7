#ifndef MULTIBOOT_MULTIBOOT_HPP
#define MULTIBOOT_MULTIBOOT_HPP

#include "agreement.hpp"
#include "analysis.hpp"
#include "engine.hpp"
#include "errors.hpp"
#include "inference.hpp"
#include "metrics.hpp"
#include "model.hpp"
#include "rng.hpp"
#include "simulate.hpp"

#endif
