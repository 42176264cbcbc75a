#pragma once

#include "wgmfem/analysis.hpp"
#include "wgmfem/basis.hpp"
#include "wgmfem/convergence.hpp"
#include "wgmfem/driver.hpp"
#include "wgmfem/error.hpp"
#include "wgmfem/forms.hpp"
#include "wgmfem/manufactured.hpp"
#include "wgmfem/mesh.hpp"
#include "wgmfem/mesh_io.hpp"
#include "wgmfem/parallel.hpp"
#include "wgmfem/projection.hpp"
#include "wgmfem/quadrature.hpp"
#include "wgmfem/solver.hpp"
#include "wgmfem/space.hpp"
#include "wgmfem/weakdiv.hpp"
