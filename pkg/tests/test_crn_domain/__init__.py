# CRN compiler tests
