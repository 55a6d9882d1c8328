#pragma once

// Umbrella header for the P1 maximum-principle toolkit.

#include "dmp/linalg.hpp"
#include "dmp/mesh.hpp"
#include "dmp/generators.hpp"
#include "dmp/assembly.hpp"
#include "dmp/certify.hpp"
#include "dmp/solve.hpp"
#include "dmp/studies.hpp"
#include "dmp/io.hpp"
