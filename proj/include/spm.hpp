#pragma once

#include "spm/asymptotics.hpp"
#include "spm/contact_distribution.hpp"
#include "spm/contacts.hpp"
#include "spm/hypothesis.hpp"
#include "spm/incidence.hpp"
#include "spm/model.hpp"
#include "spm/numeric.hpp"
#include "spm/params.hpp"
#include "spm/prevalence.hpp"
#include "spm/spectral.hpp"
