#ifndef FDDLM_FDDLM_HPP
#define FDDLM_FDDLM_HPP

// Umbrella header: the whole library in one include.

#include "fddlm/assembly.hpp"
#include "fddlm/bench.hpp"
#include "fddlm/csr.hpp"
#include "fddlm/elements.hpp"
#include "fddlm/errors.hpp"
#include "fddlm/linalg.hpp"
#include "fddlm/mesh.hpp"
#include "fddlm/multigrid.hpp"
#include "fddlm/precond.hpp"

#endif
