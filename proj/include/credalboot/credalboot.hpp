#pragma once

#include "credalboot/core.hpp"
#include "credalboot/gmm.hpp"
#include "credalboot/em.hpp"
#include "credalboot/bootstrap.hpp"
#include "credalboot/credal.hpp"
#include "credalboot/qp_simplex.hpp"
#include "credalboot/irqp.hpp"
#include "credalboot/focal_select.hpp"
#include "credalboot/simulation.hpp"
#include "credalboot/io.hpp"
#include "credalboot/pipeline.hpp"
