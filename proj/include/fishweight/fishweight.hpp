#ifndef FISHWEIGHT_FISHWEIGHT_HPP
#define FISHWEIGHT_FISHWEIGHT_HPP

#include "fishweight/augment.hpp"
#include "fishweight/dataset.hpp"
#include "fishweight/error.hpp"
#include "fishweight/fitting.hpp"
#include "fishweight/image_io.hpp"
#include "fishweight/imaging.hpp"
#include "fishweight/random.hpp"
#include "fishweight/serialize.hpp"
#include "fishweight/synth.hpp"
#include "fishweight/text.hpp"
#include "fishweight/trainmath.hpp"

#endif // FISHWEIGHT_FISHWEIGHT_HPP
