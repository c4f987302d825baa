#include "ratingxva/app/cli.hpp"

int main(int argc, char** argv) { return ratingxva::app::run(argc, argv); }
